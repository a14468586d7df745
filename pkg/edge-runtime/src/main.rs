//! Replay a recorded sensor stream through a PATN weight bundle.
//!
//! Usage: patn-edge <bundle.bin> <input.csv> <output.csv>
//!
//! Reads frames in file order, pushes each through the streaming state
//! machine, and writes the perturbed stream. Prints a timing summary to
//! stderr. Exit codes: 0 ok, 1 usage, 2 malformed input (the message names
//! the offending line), 3 unreadable or invalid bundle.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use patn_edge::{read_stream_csv, write_stream_csv, LoadedModel, StreamModel};

fn run() -> Result<(), (u8, String)> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 4 {
        return Err((
            1,
            format!(
                "usage: {} <bundle.bin> <input.csv> <output.csv>",
                args.first().map(String::as_str).unwrap_or("patn-edge")
            ),
        ));
    }
    let model = LoadedModel::load(args[1].as_ref())
        .map_err(|e| (3, format!("{}: {e}", args[1])))?;
    let text = fs::read_to_string(&args[2])
        .map_err(|e| (2, format!("{}: {e}", args[2])))?;
    let empty_input = text.is_empty();
    let (times, frames) = if empty_input {
        // an empty capture replays to an empty capture
        (Vec::new(), Vec::new())
    } else {
        read_stream_csv(&text).map_err(|e| (2, format!("{}: {e}", args[2])))?
    };

    let d = model.d;
    if d != 6 {
        return Err((3, format!("{}: bundle expects {d} channels, streams carry 6", args[1])));
    }
    let mut sim = StreamModel::new(model);
    let mut out = Vec::with_capacity(frames.len());
    let mut frame = [0.0f32; 6];
    let mut delta = [0.0f32; 6];
    let mut gen_ticks = 0usize;
    let mut gen_total = 0.0f64;
    let mut gen_worst = 0.0f64;
    let started = Instant::now();
    for row in &frames {
        for k in 0..6 {
            frame[k] = row[k] as f32;
        }
        let tick = Instant::now();
        let generated = sim.push_frame(&frame, &mut delta);
        let spent = tick.elapsed().as_secs_f64();
        if generated {
            gen_ticks += 1;
            gen_total += spent;
            if spent > gen_worst {
                gen_worst = spent;
            }
        }
        let mut adv = [0.0f64; 6];
        for k in 0..6 {
            adv[k] = row[k] + delta[k] as f64;
        }
        out.push(adv);
    }
    let wall = started.elapsed().as_secs_f64();
    let rendered = if empty_input { String::new() } else { write_stream_csv(&times, &out) };
    fs::write(&args[3], rendered).map_err(|e| (2, format!("{}: {e}", args[3])))?;

    let fps = if wall > 0.0 { frames.len() as f64 / wall } else { f64::INFINITY };
    eprintln!(
        "replayed {} frames ({} generations) in {:.3} ms: {:.0} frames/s",
        frames.len(),
        gen_ticks,
        wall * 1e3,
        fps
    );
    if gen_ticks > 0 {
        eprintln!(
            "generation latency: mean {:.3} ms, worst {:.3} ms",
            gen_total / gen_ticks as f64 * 1e3,
            gen_worst * 1e3
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("patn-edge: {msg}");
            ExitCode::from(code)
        }
    }
}
