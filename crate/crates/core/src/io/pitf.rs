//! `PITF` plane container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "PITF"  u16 version  u32 width  u32 height  u16 plane_count
//! plane_count × (u8 kind, u8 tap)
//! plane_count × width·height × f32, row-major
//! ```
//!
//! The tap byte is 0, 1, 2, 3 for the 0°, 45°, 90°, 135° taps and 0xFF for
//! planes that are not taps.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plane::Plane;

pub const MAGIC: &[u8; 4] = b"PITF";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 2;
const NO_TAP: u8 = 0xFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneKind {
    Parallel,
    Cross,
    AmbientParallel,
    AmbientCross,
    Depth,
    Mask,
    Phase,
    Amplitude,
    Sigma,
    PhaseUnpolarized,
    AmplitudeUnpolarized,
    Alpha,
}

impl PlaneKind {
    const ALL: [PlaneKind; 12] = [
        PlaneKind::Parallel,
        PlaneKind::Cross,
        PlaneKind::AmbientParallel,
        PlaneKind::AmbientCross,
        PlaneKind::Depth,
        PlaneKind::Mask,
        PlaneKind::Phase,
        PlaneKind::Amplitude,
        PlaneKind::Sigma,
        PlaneKind::PhaseUnpolarized,
        PlaneKind::AmplitudeUnpolarized,
        PlaneKind::Alpha,
    ];

    pub fn code(self) -> u8 {
        PlaneKind::ALL.iter().position(|&k| k == self).expect("listed") as u8
    }

    pub fn from_code(code: u8) -> Option<PlaneKind> {
        PlaneKind::ALL.get(code as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor {
    pub kind: PlaneKind,
    /// Tap index 0..4 (0°, 45°, 90°, 135°).
    pub tap: Option<u8>,
}

impl Descriptor {
    pub fn tap(kind: PlaneKind, tap: u8) -> Self {
        Descriptor { kind, tap: Some(tap) }
    }

    pub fn plain(kind: PlaneKind) -> Self {
        Descriptor { kind, tap: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitfFile {
    pub width: usize,
    pub height: usize,
    pub planes: Vec<(Descriptor, Vec<f32>)>,
}

impl PitfFile {
    pub fn new(width: usize, height: usize) -> Self {
        PitfFile {
            width,
            height,
            planes: Vec::new(),
        }
    }

    /// Append a plane, narrowing to `f32`.
    pub fn push(&mut self, desc: Descriptor, plane: &Plane<f64>) -> Result<()> {
        if plane.dims() != (self.width, self.height) {
            return Err(Error::Format(format!(
                "plane is {:?}, container is {}x{}",
                plane.dims(),
                self.width,
                self.height
            )));
        }
        self.planes.push((desc, plane.iter().map(|&v| v as f32).collect()));
        Ok(())
    }

    pub fn get(&self, desc: Descriptor) -> Option<Plane<f64>> {
        self.planes.iter().find(|(d, _)| *d == desc).map(|(_, data)| {
            Plane::new(self.width, self.height, data.iter().map(|&v| f64::from(v)).collect())
                .expect("validated on construction")
        })
    }

    pub fn require(&self, desc: Descriptor) -> Result<Plane<f64>> {
        self.get(desc)
            .ok_or_else(|| Error::Format(format!("missing plane {desc:?}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.width * self.height;
        let width = u32::try_from(self.width).map_err(|_| Error::Format("width too large".into()))?;
        let height = u32::try_from(self.height).map_err(|_| Error::Format("height too large".into()))?;
        let count = u16::try_from(self.planes.len()).map_err(|_| Error::Format("too many planes".into()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * self.planes.len() + 4 * n * self.planes.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&width.to_le_bytes());
        out.extend_from_slice(&height.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        for (d, data) in &self.planes {
            if data.len() != n {
                return Err(Error::Format("plane length does not match dimensions".into()));
            }
            out.push(d.kind.code());
            out.push(d.tap.unwrap_or(NO_TAP));
        }
        for (_, data) in &self.planes {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Format("not a PITF file".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported PITF version {version}")));
        }
        let width = u32_at(6) as usize;
        let height = u32_at(10) as usize;
        let count = u16_at(14) as usize;
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("empty image {width}x{height}")));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let expected = n
            .checked_mul(4 * count)
            .and_then(|b| b.checked_add(HEADER_LEN + 2 * count))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "file is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let mut descriptors = Vec::with_capacity(count);
        for p in 0..count {
            let (kind, tap) = (bytes[HEADER_LEN + 2 * p], bytes[HEADER_LEN + 2 * p + 1]);
            let kind = PlaneKind::from_code(kind).ok_or_else(|| Error::Format(format!("unknown plane kind {kind}")))?;
            let tap = match tap {
                NO_TAP => None,
                t @ 0..=3 => Some(t),
                t => return Err(Error::Format(format!("bad tap label {t}"))),
            };
            descriptors.push(Descriptor { kind, tap });
        }
        let body = &bytes[HEADER_LEN + 2 * count..];
        let planes = descriptors
            .into_iter()
            .zip(body.chunks_exact(4 * n))
            .map(|(d, chunk)| {
                let data = chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                    .collect();
                (d, data)
            })
            .collect();
        Ok(PitfFile { width, height, planes })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        PitfFile::from_bytes(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, &self.to_bytes()?)
    }
}
