//! Sample sources: CSV point clouds, PGM images and synthetic densities.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::MarginalSamples;

// ---------------------------------------------------------------------------
// CSV

/// Reads one sample per row, one column per dimension, no header.
pub fn load_csv(path: impl AsRef<Path>) -> Result<MarginalSamples> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "samples".into());
    read_csv(fs::File::open(path)?, path, id)
}

/// Parses CSV samples from any reader. `path` is only used in error messages.
pub fn read_csv<R: Read>(reader: R, path: &Path, id: impl Into<String>) -> Result<MarginalSamples> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim = None;
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                path: path.to_owned(),
                line,
                expected,
                found: record.len(),
            });
        }
        for cell in &record {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                cell: cell.to_owned(),
            })?;
            data.push(v);
        }
    }
    match dim {
        Some(dim) => MarginalSamples::new(id, dim, data),
        None => Err(Error::EmptyFile(path.to_owned())),
    }
}

/// Writes samples one row per point. Values use the shortest representation
/// that parses back to the identical `f64`.
pub fn save_csv(path: impl AsRef<Path>, samples: &MarginalSamples) -> Result<()> {
    write_rows(path, samples.points())
}

pub fn write_rows<'a, I>(path: impl AsRef<Path>, rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())?;
    for row in rows {
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic densities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Standard normal in `n` dimensions.
    Normal,
    /// Uniform on `[0, 1]^n`.
    Uniform,
    /// `(t cos t, t sin t) / 4.5pi` with `t ~ U[1.5pi, 4.5pi]`, plus N(0, 0.05^2) noise.
    SwissRoll,
    /// `(z1, z2 + z1^2/2 - 1)` with `z` standard normal.
    Banana,
    /// `z1 ~ N(0, 1)`, `z2 ~ N(0, sd = exp(z1/2))`.
    Funnel,
    /// Radius `N(1, 0.1^2)` truncated to `[0.5, 1.5]`, uniform angle.
    Ring,
}

pub const RING_RADIUS_RANGE: (f64, f64) = (0.5, 1.5);

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Normal,
        Family::Uniform,
        Family::SwissRoll,
        Family::Banana,
        Family::Funnel,
        Family::Ring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Uniform => "uniform",
            Family::SwissRoll => "swiss_roll",
            Family::Banana => "banana",
            Family::Funnel => "funnel",
            Family::Ring => "ring",
        }
    }

    /// Families other than normal and uniform are planar.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            Family::Normal | Family::Uniform => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == norm || (norm == "swissroll" && *f == Family::SwissRoll))
            .ok_or_else(|| Error::UnknownFamily(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub family: Family,
    pub num_points: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Generator settings with the family's natural dimension (2 for the planar families).
    pub fn new(family: Family, num_points: usize, seed: u64) -> Self {
        Self {
            family,
            num_points,
            dim: family.fixed_dim().unwrap_or(2),
            seed,
        }
    }
}

/// Draws `num_points` i.i.d. samples, deterministic in `seed`.
pub fn sample_synthetic(spec: &SyntheticSpec) -> Result<MarginalSamples> {
    if spec.num_points == 0 || spec.dim == 0 {
        return Err(Error::InvalidArgument(
            "synthetic samples need num_points >= 1 and dim >= 1".into(),
        ));
    }
    if let Some(d) = spec.family.fixed_dim() {
        if spec.dim != d {
            return Err(Error::InvalidArgument(format!(
                "family {} is {d}-dimensional, got dim {}",
                spec.family, spec.dim
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.num_points;
    let mut data = Vec::with_capacity(n * spec.dim);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    match spec.family {
        Family::Normal => data.extend((0..n * spec.dim).map(|_| gauss())),
        Family::Uniform => {
            let u = Uniform::new(0.0, 1.0).expect("valid range");
            data.extend((0..n * spec.dim).map(|_| u.sample(&mut rng)));
        }
        Family::SwissRoll => {
            let t_dist = Uniform::new(1.5 * PI, 4.5 * PI).expect("valid range");
            let noise = Normal::new(0.0, 0.05).expect("valid sd");
            for _ in 0..n {
                let t = t_dist.sample(&mut rng);
                let scale = 4.5 * PI;
                data.push(t * t.cos() / scale + noise.sample(&mut rng));
                data.push(t * t.sin() / scale + noise.sample(&mut rng));
            }
        }
        Family::Banana => {
            for _ in 0..n {
                let z1 = gauss();
                let z2 = gauss();
                data.push(z1);
                data.push(z2 + 0.5 * z1 * z1 - 1.0);
            }
        }
        Family::Funnel => {
            for _ in 0..n {
                let z1 = gauss();
                let z2 = gauss() * (z1 / 2.0).exp();
                data.push(z1);
                data.push(z2);
            }
        }
        Family::Ring => {
            let radius = Normal::new(1.0, 0.1).expect("valid sd");
            let angle = Uniform::new(0.0, 2.0 * PI).expect("valid range");
            let (lo, hi) = RING_RADIUS_RANGE;
            for _ in 0..n {
                let r = loop {
                    let r = radius.sample(&mut rng);
                    if (lo..=hi).contains(&r) {
                        break r;
                    }
                };
                let a = angle.sample(&mut rng);
                data.push(r * a.cos());
                data.push(r * a.sin());
            }
        }
    }
    MarginalSamples::new(spec.family.name(), spec.dim, data)
}

// ---------------------------------------------------------------------------
// Grayscale images

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// `pixels` is row-major with intensities in `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "pixel {i} intensity {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Encodes as binary (P5) or ASCII (P2) PGM with the given maxval.
    pub fn to_pgm(&self, binary: bool, maxval: u16) -> Vec<u8> {
        let maxval = maxval.max(1);
        let magic = if binary { "P5" } else { "P2" };
        let mut out = format!("{magic}\n{} {}\n{maxval}\n", self.width, self.height).into_bytes();
        let levels = self
            .pixels
            .iter()
            .map(|p| (p * f64::from(maxval)).round() as u16);
        if binary {
            for v in levels {
                if maxval < 256 {
                    out.push(v as u8);
                } else {
                    out.extend_from_slice(&v.to_be_bytes());
                }
            }
        } else {
            for row in levels.collect::<Vec<_>>().chunks(self.width) {
                let line: Vec<String> = row.iter().map(u16::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        out
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

pub fn save_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    fs::File::create(path)?.write_all(&img.to_pgm(true, 255))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                Error::TruncatedData(format!("missing {what}"))
            } else {
                Error::InvalidArgument(format!("PGM: expected {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("PGM: {what} out of range")))
    }
}

/// Decodes P2 (ASCII) or P5 (binary) PGM; intensities are scaled by maxval.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let magic = bytes.get(..2).unwrap_or(bytes);
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => return Err(Error::BadMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.token("width")? as usize;
    let height = cur.token("height")? as usize;
    let maxval = cur.token("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidArgument(format!("PGM maxval {maxval} not in 1..=65535")));
    }
    let count = width * height;
    let scale = f64::from(maxval);
    let mut levels = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = cur.pos + 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let raster = bytes.get(start..).unwrap_or(&[]);
        if raster.len() < count * bpp {
            return Err(Error::TruncatedData(format!(
                "expected {} raster bytes, found {}",
                count * bpp,
                raster.len()
            )));
        }
        for px in raster[..count * bpp].chunks_exact(bpp) {
            levels.push(if bpp == 1 {
                u32::from(px[0])
            } else {
                u32::from(u16::from_be_bytes([px[0], px[1]]))
            });
        }
    } else {
        for i in 0..count {
            levels.push(cur.token(&format!("pixel {i}"))?);
        }
    }
    if let Some(v) = levels.iter().find(|&&v| v > maxval) {
        return Err(Error::InvalidArgument(format!("PGM sample {v} exceeds maxval {maxval}")));
    }
    GrayImage::new(width, height, levels.into_iter().map(|v| f64::from(v) / scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageMode {
    /// One `(x, y, intensity)` sample per pixel.
    Grid,
    /// Pixel centers drawn with probability proportional to intensity.
    #[default]
    IntensitySampled,
}

/// Converts an image into equal-weight samples. Pixel `(row, col)` has center
/// `((col + 0.5) / width, (row + 0.5) / height)`.
pub fn image_to_samples(
    img: &GrayImage,
    num_points: usize,
    mode: ImageMode,
    seed: u64,
    id: impl Into<String>,
) -> Result<MarginalSamples> {
    let (w, h) = (img.width, img.height);
    let center = |idx: usize| ((idx % w) as f64 + 0.5) / w as f64;
    let center_y = |idx: usize| ((idx / w) as f64 + 0.5) / h as f64;
    match mode {
        ImageMode::Grid => {
            if num_points != w * h {
                return Err(Error::InvalidArgument(format!(
                    "grid mode needs N_p = width*height = {}, got {num_points}",
                    w * h
                )));
            }
            let data = img
                .pixels
                .iter()
                .enumerate()
                .flat_map(|(i, &p)| [center(i), center_y(i), p])
                .collect();
            MarginalSamples::new(id, 3, data)
        }
        ImageMode::IntensitySampled => {
            if num_points == 0 {
                return Err(Error::InvalidArgument("N_p must be >= 1".into()));
            }
            if !img.pixels.iter().any(|&p| p > 0.0) {
                return Err(Error::ZeroMassImage);
            }
            let dist = WeightedIndex::new(&img.pixels).map_err(|_| Error::ZeroMassImage)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = (0..num_points)
                .flat_map(|_| {
                    let i = dist.sample(&mut rng);
                    [center(i), center_y(i)]
                })
                .collect();
            MarginalSamples::new(id, 2, data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let s = read_csv("0,0\n1,0\n".as_bytes(), Path::new("t.csv"), "t").unwrap();
        assert_eq!(s.num_points(), 2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.data(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn csv_crlf_and_spaces() {
        let s = read_csv("1.5, -2\r\n3e-1,4\r\n".as_bytes(), Path::new("t.csv"), "t").unwrap();
        assert_eq!(s.data(), &[1.5, -2.0, 0.3, 4.0]);
    }

    #[test]
    fn csv_errors() {
        let p = Path::new("t.csv");
        assert!(matches!(
            read_csv("0,0\n1\n".as_bytes(), p, "t"),
            Err(Error::RaggedRows { expected: 2, found: 1, line: 2, .. })
        ));
        assert!(matches!(
            read_csv("0,x\n".as_bytes(), p, "t"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(read_csv("".as_bytes(), p, "t"), Err(Error::EmptyFile(_))));
        assert!(matches!(
            read_csv("0,nan\n".as_bytes(), p, "t"),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn family_names() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("Swiss-Roll".parse::<Family>().unwrap(), Family::SwissRoll);
        assert!(matches!("moons".parse::<Family>(), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn normal_mean_bound() {
        let n = 10_000;
        let s = sample_synthetic(&SyntheticSpec::new(Family::Normal, n, 5)).unwrap();
        for d in 0..2 {
            let mean: f64 = s.points().map(|p| p[d]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn ring_support() {
        let s = sample_synthetic(&SyntheticSpec::new(Family::Ring, 5000, 1)).unwrap();
        let (lo, hi) = RING_RADIUS_RANGE;
        for p in s.points() {
            let r = p[0].hypot(p[1]);
            assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
        }
    }

    #[test]
    fn uniform_support_and_dim() {
        let spec = SyntheticSpec {
            family: Family::Uniform,
            num_points: 1000,
            dim: 5,
            seed: 0,
        };
        let s = sample_synthetic(&spec).unwrap();
        assert_eq!(s.dim(), 5);
        assert!(s.data().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn generators_deterministic_and_finite() {
        for f in Family::ALL {
            let spec = SyntheticSpec::new(f, 500, 77);
            let a = sample_synthetic(&spec).unwrap();
            let b = sample_synthetic(&spec).unwrap();
            assert_eq!(a, b);
            assert!(a.data().iter().all(|v| v.is_finite()));
            let c = sample_synthetic(&SyntheticSpec { seed: 78, ..spec }).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn planar_family_rejects_other_dims() {
        let spec = SyntheticSpec {
            dim: 3,
            ..SyntheticSpec::new(Family::Banana, 10, 0)
        };
        assert!(sample_synthetic(&spec).is_err());
    }

    #[test]
    fn pgm_ascii() {
        let img = parse_pgm(b"P2 2 1 255\n0 255\n").unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn pgm_comments_and_wide_maxval() {
        let img = parse_pgm(b"P2\n# made by hand\n1 2\n# max\n1000\n500\n1000\n").unwrap();
        assert_eq!(img.pixels(), &[0.5, 1.0]);
        let mut p5 = b"P5 2 1 65535\n".to_vec();
        p5.extend_from_slice(&[0x80, 0x00, 0xff, 0xff]);
        let img = parse_pgm(&p5).unwrap();
        assert!((img.pixels()[0] - 32768.0 / 65535.0).abs() < 1e-15);
        assert_eq!(img.pixels()[1], 1.0);
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(parse_pgm(b"P6 1 1 255\n\0\0\0"), Err(Error::BadMagic(_))));
        assert!(matches!(parse_pgm(b"P5 2 2 255\n\x01\x02\x03"), Err(Error::TruncatedData(_))));
        assert!(matches!(parse_pgm(b"P2 2 2 255\n1 2 3"), Err(Error::TruncatedData(_))));
        assert!(parse_pgm(b"P2 1 1 10\n11\n").is_err());
    }

    #[test]
    fn pgm_p5_equals_p2() {
        let px: Vec<f64> = (0..12).map(|i| f64::from(i * 20) / 255.0).collect();
        let img = GrayImage::new(4, 3, px).unwrap();
        for maxval in [255, 4095] {
            let a = parse_pgm(&img.to_pgm(true, maxval)).unwrap();
            let b = parse_pgm(&img.to_pgm(false, maxval)).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(parse_pgm(&img.to_pgm(true, 255)).unwrap(), img);
    }

    #[test]
    fn single_bright_pixel() {
        let img = GrayImage::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let s = image_to_samples(&img, 5, ImageMode::IntensitySampled, 3, "img").unwrap();
        assert_eq!(s.num_points(), 5);
        for p in s.points() {
            assert_eq!(p, &[0.25, 0.75]);
        }
    }

    #[test]
    fn constant_image_uniform_counts() {
        let (w, h) = (4, 4);
        let img = GrayImage::new(w, h, vec![0.6; w * h]).unwrap();
        let n = 10_000;
        let s = image_to_samples(&img, n, ImageMode::IntensitySampled, 9, "c").unwrap();
        let mut counts = vec![0usize; w * h];
        for p in s.points() {
            let col = (p[0] * w as f64 - 0.5).round() as usize;
            let row = (p[1] * h as f64 - 0.5).round() as usize;
            counts[row * w + col] += 1;
        }
        let q = 1.0 / (w * h) as f64;
        let mean = n as f64 * q;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 5.0 * sigma));
    }

    #[test]
    fn grid_mode_shape() {
        let img = GrayImage::new(4, 4, (0..16).map(|i| f64::from(i) / 15.0).collect()).unwrap();
        let s = image_to_samples(&img, 16, ImageMode::Grid, 0, "g").unwrap();
        assert_eq!((s.num_points(), s.dim()), (16, 3));
        assert_eq!(s.point(5), &[0.375, 0.375, 5.0 / 15.0]);
        assert!(image_to_samples(&img, 15, ImageMode::Grid, 0, "g").is_err());
    }

    #[test]
    fn black_image_has_no_mass() {
        let img = GrayImage::new(3, 1, vec![0.0; 3]).unwrap();
        assert!(matches!(
            image_to_samples(&img, 4, ImageMode::IntensitySampled, 0, "b"),
            Err(Error::ZeroMassImage)
        ));
    }
}
