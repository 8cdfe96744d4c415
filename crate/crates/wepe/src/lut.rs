//! Dense Res×Res×4 precomputation of the stabilized feature field, bilinear
//! queries, interpolation-error scanning, and the binary file format.
//!
//! File layout (little-endian): magic `WEPE`, u32 version = 1, u8 mode
//! (0 = pre-train encoder, 1 = surrogate), u32 Res, u32-length-prefixed UTF-8
//! JSON config snapshot, Res·Res·4 binary32 values (row-major over v-rows,
//! u-columns, channel-interleaved), CRC-32 of the data section.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{EncoderConfig, FeatureVec4, GridEncoder};
use crate::lattice::nearest_lattice_distance;
use crate::surrogate::{ft_features, SurrogateConfig};
use crate::util::QuasiRandom2;

pub const LUT_MAGIC: [u8; 4] = *b"WEPE";
pub const LUT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LutError {
    #[error("resolution must be >= 2, got {0}")]
    ResolutionTooSmall(u32),
    #[error("query ({u}, {v}) outside the unit square")]
    QueryOutOfRange { u: f64, v: f64 },
    #[error("error scan needs at least 100 samples, got {0}")]
    TooFewSamples(usize),
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which pipeline produced the stored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfigSnapshot {
    Pretrain(EncoderConfig),
    Finetune(SurrogateConfig),
}

impl ConfigSnapshot {
    pub fn mode_byte(&self) -> u8 {
        match self {
            ConfigSnapshot::Pretrain(_) => 0,
            ConfigSnapshot::Finetune(_) => 1,
        }
    }
}

/// Immutable lookup table over the unit square. Node (p, q) holds the field
/// at u = q/(Res−1), v = p/(Res−1); queries interpolate bilinearly and are
/// clamped (not wrapped) at the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    resolution: u32,
    snapshot: ConfigSnapshot,
    data: Vec<f32>,
}

fn build_rows<F>(res: u32, field: F) -> Vec<f32>
where
    F: Fn(f64, f64) -> FeatureVec4 + Sync + Send,
{
    let res = res as usize;
    let step = 1.0 / (res - 1) as f64;
    let field = &field;
    (0..res)
        .into_par_iter()
        .flat_map_iter(move |p| {
            let v = p as f64 * step;
            (0..res).flat_map(move |q| {
                let u = q as f64 * step;
                field(u, v).as_array().map(|x| x as f32)
            })
        })
        .collect()
}

impl Lut {
    /// Precompute the stabilized pre-training field. Nodes that trip the
    /// pole guard store the stabilized substitute tanh(α_scale·C_large).
    pub fn build(cfg: &EncoderConfig, res: u32) -> Result<Self, LutError> {
        if res < 2 {
            return Err(LutError::ResolutionTooSmall(res));
        }
        let enc = GridEncoder::new(cfg);
        let data = build_rows(res, |u, v| enc.features_at(u, v));
        Ok(Self {
            resolution: res,
            snapshot: ConfigSnapshot::Pretrain(cfg.clone()),
            data,
        })
    }

    /// Precompute the fine-tuning surrogate field.
    pub fn build_surrogate(cfg: &SurrogateConfig, res: u32) -> Result<Self, LutError> {
        if res < 2 {
            return Err(LutError::ResolutionTooSmall(res));
        }
        let data = build_rows(res, |u, v| ft_features(u, v, cfg));
        Ok(Self {
            resolution: res,
            snapshot: ConfigSnapshot::Finetune(cfg.clone()),
            data,
        })
    }

    /// Assemble a table from raw parts; `data` must hold exactly
    /// res·res·4 finite values.
    pub fn from_parts(
        resolution: u32,
        snapshot: ConfigSnapshot,
        data: Vec<f32>,
    ) -> Result<Self, LutError> {
        if resolution < 2 {
            return Err(LutError::ResolutionTooSmall(resolution));
        }
        let expect = resolution as usize * resolution as usize * 4;
        if data.len() != expect {
            return Err(LutError::MalformedFile(format!(
                "data length {} does not match {expect}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(LutError::MalformedFile(format!("non-finite value {bad}")));
        }
        Ok(Self { resolution, snapshot, data })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn snapshot(&self) -> &ConfigSnapshot {
        &self.snapshot
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Stored node value.
    pub fn node(&self, p: u32, q: u32) -> FeatureVec4 {
        let idx = ((p * self.resolution + q) * 4) as usize;
        FeatureVec4::from_array([
            self.data[idx] as f64,
            self.data[idx + 1] as f64,
            self.data[idx + 2] as f64,
            self.data[idx + 3] as f64,
        ])
    }

    /// Bilinear blend of the four surrounding nodes; exact at nodes.
    pub fn query_bilinear(&self, u: f64, v: f64) -> Result<FeatureVec4, LutError> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(LutError::QueryOutOfRange { u, v });
        }
        let last_cell = (self.resolution - 2) as f64;
        let x = u * (self.resolution - 1) as f64;
        let y = v * (self.resolution - 1) as f64;
        let q0 = x.floor().min(last_cell);
        let p0 = y.floor().min(last_cell);
        let tx = x - q0;
        let ty = y - p0;
        let (p0, q0) = (p0 as u32, q0 as u32);
        let c00 = self.node(p0, q0).as_array();
        let c01 = self.node(p0, q0 + 1).as_array();
        let c10 = self.node(p0 + 1, q0).as_array();
        let c11 = self.node(p0 + 1, q0 + 1).as_array();
        let mut out = [0.0; 4];
        for k in 0..4 {
            let top = (1.0 - tx) * c00[k] + tx * c01[k];
            let bot = (1.0 - tx) * c10[k] + tx * c11[k];
            out[k] = (1.0 - ty) * top + ty * bot;
        }
        Ok(FeatureVec4::from_array(out))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), LutError> {
        w.write_all(&LUT_MAGIC)?;
        w.write_all(&LUT_VERSION.to_le_bytes())?;
        w.write_all(&[self.snapshot.mode_byte()])?;
        w.write_all(&self.resolution.to_le_bytes())?;
        let json = match &self.snapshot {
            ConfigSnapshot::Pretrain(cfg) => serde_json::to_vec(cfg),
            ConfigSnapshot::Finetune(cfg) => serde_json::to_vec(cfg),
        }
        .map_err(|e| LutError::MalformedFile(format!("config serialization failed: {e}")))?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        let mut hasher = crc32fast::Hasher::new();
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for &x in &self.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        hasher.update(&buf);
        w.write_all(&buf)?;
        w.write_all(&hasher.finalize().to_le_bytes())?;
        Ok(())
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<(), LutError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, LutError> {
        let mut magic = [0u8; 4];
        read_exact_or(&mut r, &mut magic, "magic")?;
        if magic != LUT_MAGIC {
            return Err(LutError::MalformedFile(format!(
                "bad magic {magic:02x?}, expected {LUT_MAGIC:02x?}"
            )));
        }
        let version = read_u32(&mut r, "version")?;
        if version != LUT_VERSION {
            return Err(LutError::MalformedFile(format!(
                "unsupported version {version}, expected {LUT_VERSION}"
            )));
        }
        let mut mode = [0u8; 1];
        read_exact_or(&mut r, &mut mode, "mode")?;
        let resolution = read_u32(&mut r, "resolution")?;
        if resolution < 2 {
            return Err(LutError::MalformedFile(format!("resolution {resolution} < 2")));
        }
        let json_len = read_u32(&mut r, "config length")? as usize;
        let mut json = vec![0u8; json_len];
        read_exact_or(&mut r, &mut json, "config blob")?;
        let snapshot = match mode[0] {
            0 => ConfigSnapshot::Pretrain(
                serde_json::from_slice(&json)
                    .map_err(|e| LutError::MalformedFile(format!("bad encoder config: {e}")))?,
            ),
            1 => ConfigSnapshot::Finetune(
                serde_json::from_slice(&json)
                    .map_err(|e| LutError::MalformedFile(format!("bad surrogate config: {e}")))?,
            ),
            m => return Err(LutError::MalformedFile(format!("unknown mode byte {m}"))),
        };
        let n_values = resolution as usize * resolution as usize * 4;
        let expected = n_values * 4;
        let mut payload = vec![0u8; expected];
        let mut got = 0;
        while got < expected {
            let n = r.read(&mut payload[got..])?;
            if n == 0 {
                return Err(LutError::MalformedFile(format!(
                    "truncated data section: expected {expected} bytes, got {got}"
                )));
            }
            got += n;
        }
        let stored_crc = read_u32(&mut r, "checksum")?;
        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&payload);
        let crc = hasher.finalize();
        if crc != stored_crc {
            return Err(LutError::MalformedFile(format!(
                "checksum mismatch: stored {stored_crc:#010x}, computed {crc:#010x}"
            )));
        }
        let mut data = Vec::with_capacity(n_values);
        for chunk in payload.chunks_exact(4) {
            let x = f32::from_le_bytes(chunk.try_into().unwrap());
            if !x.is_finite() {
                return Err(LutError::MalformedFile(format!(
                    "non-finite value {x} at element {}",
                    data.len()
                )));
            }
            data.push(x);
        }
        Ok(Self { resolution, snapshot, data })
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self, LutError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), LutError> {
    r.read_exact(buf).map_err(|_| {
        LutError::MalformedFile(format!("truncated while reading {what} ({} bytes)", buf.len()))
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, LutError> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

/// Result of one interpolation-error scan.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorScan {
    pub resolution: u32,
    pub exclusion_radius: f64,
    pub n_samples: usize,
    pub max_err: f64,
    pub mean_err: f64,
    pub per_channel_max: [f64; 4],
    pub per_channel_mean: [f64; 4],
}

/// Compare bilinear queries against direct stabilized evaluation on a
/// deterministic quasi-random sample of the unit square whose mapped points
/// keep at least `exclusion_radius` lattice distance.
pub fn error_scan(
    cfg: &EncoderConfig,
    res: u32,
    n_samples: usize,
    exclusion_radius: f64,
) -> Result<ErrorScan, LutError> {
    if n_samples < 100 {
        return Err(LutError::TooFewSamples(n_samples));
    }
    let lut = Lut::build(cfg, res)?;
    let enc = GridEncoder::new(cfg);
    let lat = cfg.effective_lattice();
    let mut seq = QuasiRandom2::new();
    let mut max_err = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut ch_max = [0.0f64; 4];
    let mut ch_sum = [0.0f64; 4];
    let mut used = 0usize;
    let mut attempts = 0usize;
    let budget = n_samples.saturating_mul(1000);
    while used < n_samples && attempts < budget {
        attempts += 1;
        let (u, v) = seq.next_point();
        let z = crate::encoder::map_to_complex(u, v, cfg);
        if nearest_lattice_distance(z, &lat) < exclusion_radius {
            continue;
        }
        let approx = lut.query_bilinear(u, v)?.as_array();
        let exact = enc.features_at(u, v).as_array();
        let mut worst = 0.0f64;
        for k in 0..4 {
            let e = (approx[k] - exact[k]).abs();
            ch_max[k] = ch_max[k].max(e);
            ch_sum[k] += e;
            worst = worst.max(e);
        }
        max_err = max_err.max(worst);
        sum_err += worst;
        used += 1;
    }
    Ok(ErrorScan {
        resolution: res,
        exclusion_radius,
        n_samples: used,
        max_err,
        mean_err: sum_err / used.max(1) as f64,
        per_channel_max: ch_max,
        per_channel_mean: ch_sum.map(|s| s / used.max(1) as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;

    #[test]
    fn rejects_res_below_two() {
        let cfg = EncoderConfig::default();
        assert!(matches!(Lut::build(&cfg, 1), Err(LutError::ResolutionTooSmall(1))));
        assert!(Lut::build(&cfg, 2).is_ok());
    }

    #[test]
    fn res_two_is_unit_square_corners() {
        let cfg = EncoderConfig::default();
        let lut = Lut::build(&cfg, 2).unwrap();
        assert_eq!(lut.data().len(), 16);
        // Corner (0,0) maps to z = 0, tripping the pole guard; the stored
        // value is the stabilized substitute.
        let sub = (cfg.alpha_scale() * cfg.lattice.c_large).tanh() as f32;
        assert_eq!(lut.node(0, 0).f1 as f32, sub);
        assert_eq!(lut.node(0, 0).f2, 0.0);
    }

    #[test]
    fn corner_pole_substitute_at_256() {
        let cfg = EncoderConfig::default();
        let lut = Lut::build(&cfg, 64).unwrap();
        let v = lut.node(0, 0);
        assert!((v.f1 - 1.0).abs() < 1e-6, "tanh(0.15 * 1e3) ~ 1");
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let cfg = EncoderConfig::default();
        let a = Lut::build(&cfg, 33).unwrap();
        let b = Lut::build(&cfg, 33).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_to(&mut ba).unwrap();
        b.write_to(&mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn query_exact_at_nodes() {
        let cfg = EncoderConfig::default();
        let lut = Lut::build(&cfg, 17).unwrap();
        for p in 0..17u32 {
            for q in 0..17u32 {
                let u = q as f64 / 16.0;
                let v = p as f64 / 16.0;
                let got = lut.query_bilinear(u, v).unwrap();
                assert_eq!(got, lut.node(p, q), "node ({p}, {q})");
            }
        }
    }

    #[test]
    fn query_cell_center_averages_corners() {
        let cfg = EncoderConfig::default();
        let lut = Lut::build(&cfg, 5).unwrap();
        let got = lut.query_bilinear(0.125, 0.125).unwrap().as_array();
        let avg: Vec<f64> = (0..4)
            .map(|k| {
                (lut.node(0, 0).as_array()[k]
                    + lut.node(0, 1).as_array()[k]
                    + lut.node(1, 0).as_array()[k]
                    + lut.node(1, 1).as_array()[k])
                    / 4.0
            })
            .collect();
        for k in 0..4 {
            assert!((got[k] - avg[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_reproduces_bilinear_fields() {
        // A field linear in u and v separately is interpolated exactly.
        let mut lut = Lut::build(&EncoderConfig::default(), 9).unwrap();
        let res = lut.resolution;
        for p in 0..res {
            for q in 0..res {
                let u = q as f64 / (res - 1) as f64;
                let v = p as f64 / (res - 1) as f64;
                let val = (2.0 * u * v - 0.5 * u + 0.25 * v + 0.125) as f32;
                let idx = ((p * res + q) * 4) as usize;
                for c in 0..4 {
                    lut.data[idx + c] = val;
                }
            }
        }
        let mut seq = QuasiRandom2::new();
        for _ in 0..200 {
            let (u, v) = seq.next_point();
            let got = lut.query_bilinear(u, v).unwrap();
            let want = 2.0 * u * v - 0.5 * u + 0.25 * v + 0.125;
            // f32 storage rounds the nodes; allow that much slack.
            assert!((got.f1 - want).abs() < 1e-6, "u={u} v={v}");
        }
    }

    #[test]
    fn query_rejects_outside_unit_square() {
        let lut = Lut::build(&EncoderConfig::default(), 4).unwrap();
        assert!(matches!(
            lut.query_bilinear(-0.01, 0.5),
            Err(LutError::QueryOutOfRange { .. })
        ));
        assert!(lut.query_bilinear(1.0, 1.0).is_ok());
    }

    #[test]
    fn surrogate_lut_mode_byte() {
        let lut = Lut::build_surrogate(&SurrogateConfig::default(), 8).unwrap();
        assert_eq!(lut.snapshot().mode_byte(), 1);
        let mut bytes = Vec::new();
        lut.write_to(&mut bytes).unwrap();
        assert_eq!(bytes[8], 1);
        let back = Lut::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, lut);
    }

    #[test]
    fn constant_field_zero_scan_error() {
        // alpha_scale = 0 collapses every feature to exactly 0.
        let cfg = EncoderConfig { alpha_scale_raw: f64::NEG_INFINITY, ..Default::default() };
        let scan = error_scan(&cfg, 16, 200, 0.05).unwrap();
        assert_eq!(scan.max_err, 0.0);
        assert_eq!(scan.mean_err, 0.0);
    }

    #[test]
    fn scan_rejects_small_samples() {
        let cfg = EncoderConfig::default();
        assert!(matches!(
            error_scan(&cfg, 16, 99, 0.05),
            Err(LutError::TooFewSamples(99))
        ));
    }
}
