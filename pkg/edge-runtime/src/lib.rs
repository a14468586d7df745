//! Forward-only runtime for PATN weight bundles.
//!
//! Loads the exporter's checksummed little-endian container, rebuilds the
//! encoder/decoder recurrences in plain f32, and perturbs a frame stream
//! through the same ring-buffer state machine as the reference simulator:
//! zeros for the first `t_in` frames, then one `t_out`-frame block generated
//! at every block boundary from clean history only.
//!
//! After `StreamModel::new` no step allocates: all state and scratch is
//! preallocated.

use std::fmt;
use std::fs;
use std::path::Path;

// ---------------------------------------------------------------------------
// CRC-32 (IEEE, same polynomial as zlib)
// ---------------------------------------------------------------------------

fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

pub fn crc32(data: &[u8]) -> u32 {
    let table = crc32_table();
    let mut c = 0xFFFF_FFFFu32;
    for &b in data {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    /// Stored vs computed CRC over everything before the trailer.
    Checksum { stored: u32, computed: u32 },
    /// Structural problem; offset is the byte position that failed.
    Schema { offset: usize, msg: String },
    UnsupportedVersion(u16),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "io error: {e}"),
            LoadError::Checksum { stored, computed } => write!(
                f,
                "bundle checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
            ),
            LoadError::Schema { offset, msg } => {
                write!(f, "malformed bundle at offset {offset}: {msg}")
            }
            LoadError::UnsupportedVersion(v) => {
                write!(f, "unsupported bundle version {v}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl From<std::io::Error> for LoadError {
    fn from(e: std::io::Error) -> Self {
        LoadError::Io(e)
    }
}

// ---------------------------------------------------------------------------
// Bundle parsing
// ---------------------------------------------------------------------------

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LoadError> {
        if self.pos + n > self.data.len() {
            return Err(LoadError::Schema {
                offset: self.pos,
                msg: format!(
                    "wanted {n} bytes, have {}",
                    self.data.len() - self.pos
                ),
            });
        }
        let b = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8, LoadError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, LoadError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, LoadError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32_vec(&mut self, count: usize) -> Result<Vec<f32>, LoadError> {
        let b = self.take(4 * count)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn ascii(&mut self, len: usize) -> Result<String, LoadError> {
        let off = self.pos;
        let b = self.take(len)?;
        if !b.is_ascii() {
            return Err(LoadError::Schema { offset: off, msg: "non-ASCII name".into() });
        }
        Ok(String::from_utf8(b.to_vec()).unwrap())
    }
}

#[derive(Debug)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug)]
pub struct Bundle {
    pub config: Vec<(String, u32)>,
    pub eps: Vec<f32>,
    pub tensors: Vec<Tensor>,
}

impl Bundle {
    pub fn config_get(&self, key: &str) -> Option<u32> {
        self.config.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn n_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }
}

pub fn parse_bundle(data: &[u8]) -> Result<Bundle, LoadError> {
    if data.len() < 14 {
        return Err(LoadError::Schema {
            offset: 0,
            msg: format!("{} bytes is too short to be a bundle", data.len()),
        });
    }
    let trailer = data.len() - 4;
    let stored = u32::from_le_bytes([
        data[trailer],
        data[trailer + 1],
        data[trailer + 2],
        data[trailer + 3],
    ]);
    let computed = crc32(&data[..trailer]);
    if stored != computed {
        return Err(LoadError::Checksum { stored, computed });
    }
    let mut r = Reader { data: &data[..trailer], pos: 0 };
    if r.take(4)? != b"PATN" {
        return Err(LoadError::Schema { offset: 0, msg: "bad magic".into() });
    }
    let version = r.u16()?;
    if version != 1 {
        return Err(LoadError::UnsupportedVersion(version));
    }
    let n_config = r.u16()? as usize;
    let mut config = Vec::with_capacity(n_config);
    for _ in 0..n_config {
        let len = r.u8()? as usize;
        let key = r.ascii(len)?;
        let val = r.u32()?;
        config.push((key, val));
    }
    let n_eps = r.u32()? as usize;
    let eps = r.f32_vec(n_eps)?;
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let len = r.u8()? as usize;
        let name = r.ascii(len)?;
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| LoadError::Schema {
                offset: r.pos,
                msg: format!("tensor {name} dims overflow: {shape:?}"),
            })?;
        let data = r.f32_vec(count)?;
        tensors.push(Tensor { name, shape, data });
    }
    if r.pos != trailer {
        return Err(LoadError::Schema {
            offset: r.pos,
            msg: format!("{} trailing bytes after tensor table", trailer - r.pos),
        });
    }
    Ok(Bundle { config, eps, tensors })
}

// ---------------------------------------------------------------------------
// The generator network
// ---------------------------------------------------------------------------

/// One matrix, row-major, rows x cols.
struct Mat {
    rows: usize,
    cols: usize,
    w: Vec<f32>,
}

impl Mat {
    fn from_tensor(t: &Tensor, rows: usize, cols: usize) -> Result<Mat, LoadError> {
        if t.shape != [rows, cols] {
            return Err(LoadError::Schema {
                offset: 0,
                msg: format!(
                    "tensor {} has shape {:?}, expected [{rows}, {cols}]",
                    t.name, t.shape
                ),
            });
        }
        Ok(Mat { rows, cols, w: t.data.clone() })
    }

    /// out += W @ x
    fn matvec_add(&self, x: &[f32], out: &mut [f32]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.w[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0f32;
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            *o += acc;
        }
    }
}

fn vec_from(t: &Tensor, len: usize) -> Result<Vec<f32>, LoadError> {
    if t.data.len() != len {
        return Err(LoadError::Schema {
            offset: 0,
            msg: format!(
                "tensor {} has {} values, expected {len}",
                t.name,
                t.data.len()
            ),
        });
    }
    Ok(t.data.clone())
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Parsed model with preallocated state: loading is the last allocation.
pub struct LoadedModel {
    pub t_in: usize,
    pub t_out: usize,
    pub d: usize,
    pub h: usize,
    pub n_params: usize,
    eps: Vec<f32>,
    in_mu: Vec<f32>,
    in_sigma: Vec<f32>,
    enc_w_ih: Mat,
    enc_w_hh: Mat,
    enc_b: Vec<f32>, // b_ih + b_hh, fused
    dec_w_ih: Mat,
    dec_w_hh: Mat,
    dec_b: Vec<f32>,
    out_w: Mat,
    out_b: Vec<f32>,
    // scratch
    hx: Vec<f32>,
    cx: Vec<f32>,
    gates: Vec<f32>,
    fed: Vec<f32>,
    z: Vec<f32>,
}

impl LoadedModel {
    pub fn from_bundle(b: &Bundle) -> Result<LoadedModel, LoadError> {
        let need = |key: &str| {
            b.config_get(key).ok_or_else(|| LoadError::Schema {
                offset: 0,
                msg: format!("missing config entry {key}"),
            })
        };
        let t_in = need("T_in")? as usize;
        let t_out = need("T_out")? as usize;
        let d = need("D")? as usize;
        let h = need("H")? as usize;
        if t_out == 0 || t_in < t_out || d == 0 || h == 0 {
            return Err(LoadError::Schema {
                offset: 0,
                msg: format!("implausible dims T_in={t_in} T_out={t_out} D={d} H={h}"),
            });
        }
        if b.eps.len() != d {
            return Err(LoadError::Schema {
                offset: 0,
                msg: format!("{} budget entries for {d} channels", b.eps.len()),
            });
        }
        let tensor = |name: &str| {
            b.tensor(name).ok_or_else(|| LoadError::Schema {
                offset: 0,
                msg: format!("missing tensor {name}"),
            })
        };
        let enc_b_ih = vec_from(tensor("enc.b_ih")?, 4 * h)?;
        let enc_b_hh = vec_from(tensor("enc.b_hh")?, 4 * h)?;
        let dec_b_ih = vec_from(tensor("dec.b_ih")?, 4 * h)?;
        let dec_b_hh = vec_from(tensor("dec.b_hh")?, 4 * h)?;
        let fuse = |a: &[f32], b: &[f32]| {
            a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f32>>()
        };
        Ok(LoadedModel {
            t_in,
            t_out,
            d,
            h,
            n_params: b.n_params(),
            eps: b.eps.clone(),
            in_mu: vec_from(tensor("norm.mu")?, d)?,
            in_sigma: vec_from(tensor("norm.sigma")?, d)?,
            enc_w_ih: Mat::from_tensor(tensor("enc.w_ih")?, 4 * h, d)?,
            enc_w_hh: Mat::from_tensor(tensor("enc.w_hh")?, 4 * h, h)?,
            enc_b: fuse(&enc_b_ih, &enc_b_hh),
            dec_w_ih: Mat::from_tensor(tensor("dec.w_ih")?, 4 * h, d)?,
            dec_w_hh: Mat::from_tensor(tensor("dec.w_hh")?, 4 * h, h)?,
            dec_b: fuse(&dec_b_ih, &dec_b_hh),
            out_w: Mat::from_tensor(tensor("out.w")?, d, h)?,
            out_b: vec_from(tensor("out.b")?, d)?,
            hx: vec![0.0; h],
            cx: vec![0.0; h],
            gates: vec![0.0; 4 * h],
            fed: vec![0.0; d],
            z: vec![0.0; d],
        })
    }

    pub fn load(path: &Path) -> Result<LoadedModel, LoadError> {
        let data = fs::read(path)?;
        LoadedModel::from_bundle(&parse_bundle(&data)?)
    }

    pub fn eps(&self) -> &[f32] {
        &self.eps
    }

    /// One fused LSTM cell step. Gate layout follows the exporter:
    /// rows [0,H) input, [H,2H) forget, [2H,3H) candidate, [3H,4H) output.
    fn cell(&mut self, x_is_fed: bool, w_ih: usize) {
        let h = self.h;
        self.gates.copy_from_slice(if w_ih == 0 { &self.enc_b } else { &self.dec_b });
        {
            let (w_i, w_h) = if w_ih == 0 {
                (&self.enc_w_ih, &self.enc_w_hh)
            } else {
                (&self.dec_w_ih, &self.dec_w_hh)
            };
            let x = if x_is_fed { &self.fed } else { &self.z };
            w_i.matvec_add(x, &mut self.gates);
            w_h.matvec_add(&self.hx, &mut self.gates);
        }
        for j in 0..h {
            let i = sigmoid(self.gates[j]);
            let f = sigmoid(self.gates[h + j]);
            let g = self.gates[2 * h + j].tanh();
            let o = sigmoid(self.gates[3 * h + j]);
            let c = f * self.cx[j] + i * g;
            self.cx[j] = c;
            self.hx[j] = o * c.tanh();
        }
    }

    /// Generate one block from `history` (t_in rows of d channels, oldest
    /// first) into `delta` (t_out * d, row-major). Verifies the budget on
    /// every emitted value.
    pub fn generate(&mut self, history: &[f32], delta: &mut [f32]) {
        assert_eq!(history.len(), self.t_in * self.d, "history shape");
        assert_eq!(delta.len(), self.t_out * self.d, "delta shape");
        self.hx.iter_mut().for_each(|v| *v = 0.0);
        self.cx.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..self.t_in {
            for ch in 0..self.d {
                self.z[ch] =
                    (history[t * self.d + ch] - self.in_mu[ch]) / self.in_sigma[ch];
            }
            self.cell(false, 0);
        }
        self.fed.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..self.t_out {
            self.cell(true, 1);
            for ch in 0..self.d {
                let mut y = self.out_b[ch];
                let row = &self.out_w.w[ch * self.h..(ch + 1) * self.h];
                for (wi, hi) in row.iter().zip(self.hx.iter()) {
                    y += wi * hi;
                }
                let fed = y.tanh();
                self.fed[ch] = fed;
                let dv = fed * self.eps[ch];
                assert!(
                    dv.abs() <= self.eps[ch],
                    "budget violated: |{dv}| > {} on channel {ch}",
                    self.eps[ch]
                );
                delta[t * self.d + ch] = dv;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Streaming state machine (mirrors the reference simulator)
// ---------------------------------------------------------------------------

pub struct StreamModel {
    pub model: LoadedModel,
    ring: Vec<f32>, // t_in rows of d, clean frames
    write_idx: usize,
    frames_seen: usize,
    pending: Vec<f32>, // t_out rows of d
    pending_pos: usize, // == t_out when empty
    history: Vec<f32>, // linearized ring scratch
    pub generations: usize,
}

impl StreamModel {
    pub fn new(model: LoadedModel) -> StreamModel {
        let (t_in, t_out, d) = (model.t_in, model.t_out, model.d);
        StreamModel {
            model,
            ring: vec![0.0; t_in * d],
            write_idx: 0,
            frames_seen: 0,
            pending: vec![0.0; t_out * d],
            pending_pos: t_out,
            history: vec![0.0; t_in * d],
            generations: 0,
        }
    }

    pub fn reset(&mut self) {
        self.ring.iter_mut().for_each(|v| *v = 0.0);
        self.write_idx = 0;
        self.frames_seen = 0;
        self.pending_pos = self.model.t_out;
        self.generations = 0;
    }

    /// Feed one clean frame; `delta` receives this frame's perturbation row.
    /// Returns true if this tick ran a generation.
    pub fn push_frame(&mut self, frame: &[f32], delta: &mut [f32]) -> bool {
        let d = self.model.d;
        let t_in = self.model.t_in;
        assert_eq!(frame.len(), d, "frame width");
        assert_eq!(delta.len(), d, "delta width");
        let mut generated = false;
        if self.frames_seen < t_in {
            delta.iter_mut().for_each(|v| *v = 0.0);
        } else {
            if self.pending_pos == self.model.t_out {
                // linearize the ring, oldest frame first
                let split = self.write_idx * d;
                let n = self.history.len();
                self.history[..n - split].copy_from_slice(&self.ring[split..]);
                self.history[n - split..].copy_from_slice(&self.ring[..split]);
                let (m, hist, pend) = (&mut self.model, &self.history, &mut self.pending);
                m.generate(hist, pend);
                self.pending_pos = 0;
                self.generations += 1;
                generated = true;
            }
            let row = &self.pending[self.pending_pos * d..(self.pending_pos + 1) * d];
            delta.copy_from_slice(row);
            self.pending_pos += 1;
        }
        self.ring[self.write_idx * d..(self.write_idx + 1) * d].copy_from_slice(frame);
        self.write_idx = (self.write_idx + 1) % t_in;
        self.frames_seen += 1;
        generated
    }
}

// ---------------------------------------------------------------------------
// Stream CSV (header with named channels, optional leading time column)
// ---------------------------------------------------------------------------

pub const CHANNELS: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"];

#[derive(Debug)]
pub struct CsvError {
    /// 1-based line number in the file.
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for CsvError {}

/// Parse a stream CSV into (times, frames); frames are row-major f64,
/// one row per line, channels in standard order regardless of file order.
pub fn read_stream_csv(text: &str) -> Result<(Vec<f64>, Vec<[f64; 6]>), CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError {
        line: 1,
        msg: "empty file: expected a header row".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut idx = [usize::MAX; 6];
    for (ci, name) in cols.iter().enumerate() {
        if let Some(k) = CHANNELS.iter().position(|c| c == name) {
            idx[k] = ci;
        }
    }
    if let Some(k) = idx.iter().position(|&v| v == usize::MAX) {
        return Err(CsvError {
            line: 1,
            msg: format!("header lacks channel column {:?}", CHANNELS[k]),
        });
    }
    let time_col = cols.iter().position(|c| *c == "time");
    let mut times = Vec::new();
    let mut frames = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(CsvError {
                line: lineno,
                msg: format!("{} fields, header has {}", cells.len(), cols.len()),
            });
        }
        let parse = |ci: usize| -> Result<f64, CsvError> {
            cells[ci].parse::<f64>().map_err(|_| CsvError {
                line: lineno,
                msg: format!("unparseable number {:?} in column {:?}", cells[ci], cols[ci]),
            })
        };
        let t = match time_col {
            Some(ci) => parse(ci)?,
            None => frames.len() as f64,
        };
        let mut row = [0.0f64; 6];
        for k in 0..6 {
            row[k] = parse(idx[k])?;
        }
        times.push(t);
        frames.push(row);
    }
    Ok((times, frames))
}

/// Serialize frames back out, shortest-roundtrip float formatting.
pub fn write_stream_csv(times: &[f64], frames: &[[f64; 6]]) -> String {
    let mut out = String::with_capacity(frames.len() * 64 + 64);
    out.push_str("time,");
    out.push_str(&CHANNELS.join(","));
    out.push('\n');
    for (t, row) in times.iter().zip(frames) {
        out.push_str(&format!("{t}"));
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
