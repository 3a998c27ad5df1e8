//! Roots to pixels: hit-count accumulation, tone mapping and PGM/PPM output.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RasterError {
    #[error("invalid viewport: {0}")]
    InvalidViewport(String),
    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("invalid tone map: {0}")]
    InvalidToneMap(String),
}

/// Rectangle of the complex plane mapped onto a `width x height` raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfView;

impl Viewport {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, RasterError> {
        let v = Self { x_min, x_max, y_min, y_max, width, height };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(RasterError::InvalidViewport("bounds must be finite".into()));
        }
        if !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(RasterError::InvalidViewport(format!(
                "need x_min < x_max and y_min < y_max, got [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RasterError::InvalidViewport("width and height must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses `xmin,xmax,ymin,ymax` with the given pixel size.
    pub fn parse(bounds: &str, width: usize, height: usize) -> Result<Self, RasterError> {
        let parts: Vec<f64> = bounds
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| RasterError::InvalidViewport(format!("cannot parse '{bounds}'")))?;
        let [x0, x1, y0, y1] = parts[..] else {
            return Err(RasterError::InvalidViewport(format!("expected 4 comma-separated values, got '{bounds}'")));
        };
        Self::new(x0, x1, y0, y1, width, height)
    }

    /// Half-open mapping onto `[x_min, x_max) x (y_min, y_max]`, y pointing
    /// down in the image.
    pub fn root_to_pixel(&self, z: Complex64) -> Result<(usize, usize), OutOfView> {
        // NaN fails every comparison
        let inside = z.re >= self.x_min && z.re < self.x_max && z.im > self.y_min && z.im <= self.y_max;
        if !inside {
            return Err(OutOfView);
        }
        let fx = (z.re - self.x_min) / (self.x_max - self.x_min) * self.width as f64;
        let fy = (self.y_max - z.im) / (self.y_max - self.y_min) * self.height as f64;
        // rounding can push a point just inside the far edge onto it
        let px = (fx.floor() as usize).min(self.width - 1);
        let py = (fy.floor() as usize).min(self.height - 1);
        Ok((px, py))
    }
}

/// Per-pixel saturating hit counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityGrid {
    width: usize,
    height: usize,
    counts: Vec<u32>,
    in_view: u64,
    dropped: u64,
}

impl DensityGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, counts: vec![0; width * height], in_view: 0, dropped: 0 }
    }

    pub fn for_viewport(v: &Viewport) -> Self {
        Self::new(v.width, v.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count_at(&self, px: usize, py: usize) -> u32 {
        self.counts[py * self.width + px]
    }

    /// Roots that landed inside the viewport.
    pub fn in_view(&self) -> u64 {
        self.in_view
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn total_roots(&self) -> u64 {
        self.in_view + self.dropped
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn hit(&mut self, px: usize, py: usize) {
        let c = &mut self.counts[py * self.width + px];
        *c = c.saturating_add(1);
        self.in_view += 1;
    }

    /// # Panics
    /// If the grid size differs from the viewport's.
    pub fn accumulate<I: IntoIterator<Item = Complex64>>(&mut self, v: &Viewport, roots: I) {
        assert_eq!((self.width, self.height), (v.width, v.height), "grid does not match viewport");
        for z in roots {
            match v.root_to_pixel(z) {
                Ok((px, py)) => self.hit(px, py),
                Err(OutOfView) => self.dropped += 1,
            }
        }
    }

    /// Saturating per-pixel sum; the root statistics add up too.
    pub fn merge(&self, other: &DensityGrid) -> Result<DensityGrid, RasterError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &DensityGrid) -> Result<(), RasterError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(RasterError::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a = a.saturating_add(*b);
        }
        self.in_view += other.in_view;
        self.dropped += other.dropped;
        Ok(())
    }

    /// Overwrites one pixel count; the root statistics are left alone.
    pub fn set_count(&mut self, px: usize, py: usize, count: u32) {
        self.counts[py * self.width + px] = count;
    }

    pub fn stats(&self) -> GridStats {
        GridStats {
            total_roots: self.total_roots(),
            in_view: self.in_view,
            dropped: self.dropped,
            max_count: self.max_count(),
            nonzero_pixels: self.counts.iter().filter(|&&c| c > 0).count() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridStats {
    pub total_roots: u64,
    pub in_view: u64,
    pub dropped: u64,
    pub max_count: u32,
    pub nonzero_pixels: u64,
}

impl GridStats {
    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "total_roots={}\nin_view={}\ndropped={}\nmax_count={}\nnonzero_pixels={}\n",
            self.total_roots, self.in_view, self.dropped, self.max_count, self.nonzero_pixels
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneMode {
    Linear,
    #[default]
    Log1p,
}

impl FromStr for ToneMode {
    type Err = RasterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ToneMode::Linear),
            "log1p" => Ok(ToneMode::Log1p),
            _ => Err(RasterError::InvalidToneMap(format!("unknown mode '{s}' (linear, log1p)"))),
        }
    }
}

impl fmt::Display for ToneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToneMode::Linear => "linear",
            ToneMode::Log1p => "log1p",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Grayscale,
    Inferno,
    Viridis,
    Ice,
}

impl Palette {
    const INFERNO: &'static [[u8; 3]] =
        &[[0, 0, 4], [66, 10, 104], [147, 38, 103], [221, 81, 58], [252, 165, 10], [252, 255, 164]];
    const VIRIDIS: &'static [[u8; 3]] = &[[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];
    const ICE: &'static [[u8; 3]] = &[[0, 0, 0], [8, 48, 107], [33, 113, 181], [107, 174, 214], [255, 255, 255]];

    fn stops(self) -> Option<&'static [[u8; 3]]> {
        match self {
            Palette::Grayscale => None,
            Palette::Inferno => Some(Self::INFERNO),
            Palette::Viridis => Some(Self::VIRIDIS),
            Palette::Ice => Some(Self::ICE),
        }
    }

    /// Color for an 8-bit level; level 0 is always black.
    pub fn color(self, level: u8) -> [u8; 3] {
        let Some(stops) = self.stops() else {
            return [level; 3];
        };
        if level == 0 {
            return [0; 3];
        }
        let pos = level as f64 / 255.0 * (stops.len() - 1) as f64;
        let k = (pos.floor() as usize).min(stops.len() - 2);
        let frac = pos - k as f64;
        let mut out = [0u8; 3];
        for ch in 0..3 {
            let a = stops[k][ch] as f64;
            let b = stops[k + 1][ch] as f64;
            out[ch] = (a + (b - a) * frac).round() as u8;
        }
        out
    }
}

impl FromStr for Palette {
    type Err = RasterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "grayscale" | "gray" | "grey" => Ok(Palette::Grayscale),
            "inferno" => Ok(Palette::Inferno),
            "viridis" => Ok(Palette::Viridis),
            "ice" => Ok(Palette::Ice),
            _ => Err(RasterError::InvalidToneMap(format!("unknown palette '{s}' (grayscale, inferno, viridis, ice)"))),
        }
    }
}

impl fmt::Display for Palette {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Palette::Grayscale => "grayscale",
            Palette::Inferno => "inferno",
            Palette::Viridis => "viridis",
            Palette::Ice => "ice",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneMap {
    pub mode: ToneMode,
    pub gamma: f64,
    pub palette: Palette,
}

impl Default for ToneMap {
    fn default() -> Self {
        Self { mode: ToneMode::Log1p, gamma: 1.0, palette: Palette::Grayscale }
    }
}

impl ToneMap {
    pub fn new(mode: ToneMode, gamma: f64, palette: Palette) -> Result<Self, RasterError> {
        let t = Self { mode, gamma, palette };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(RasterError::InvalidToneMap(format!("gamma must be a positive number, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Normalized intensity in `[0, 1]` relative to the grid maximum.
    pub fn intensity(&self, count: u32, max: u32) -> f64 {
        if count == 0 || max == 0 {
            return 0.0;
        }
        let v = match self.mode {
            ToneMode::Linear => count as f64 / max as f64,
            ToneMode::Log1p => (count as f64).ln_1p() / (max as f64).ln_1p(),
        };
        v.clamp(0.0, 1.0).powf(1.0 / self.gamma)
    }

    pub fn level(&self, count: u32, max: u32) -> u8 {
        (self.intensity(count, max) * 255.0).round() as u8
    }
}

/// 8-bit raster, one or three channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let k = (y * self.width + x) * self.channels;
        &self.data[k..k + self.channels]
    }

    /// Netpbm encoding: P5 for one channel, P6 for three.
    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

pub fn render(g: &DensityGrid, t: &ToneMap) -> Image {
    let max = g.max_count();
    let levels = g.counts.iter().map(|&c| t.level(c, max));
    let (channels, data) = match t.palette {
        Palette::Grayscale => (1, levels.collect()),
        p => (3, levels.flat_map(|l| p.color(l)).collect()),
    };
    Image { width: g.width, height: g.height, channels, data }
}

pub fn write_image(img: &Image, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&img.encode())?;
    w.flush()
}

pub fn write_stats(stats: &GridStats, path: &Path) -> io::Result<()> {
    std::fs::write(path, stats.to_kv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square4() -> Viewport {
        Viewport::new(-2.0, 2.0, -2.0, 2.0, 4, 4).unwrap()
    }

    #[test]
    fn pixel_mapping_examples() {
        let v = square4();
        assert_eq!(v.root_to_pixel(c(0.0, 0.0)), Ok((2, 2)));
        assert_eq!(v.root_to_pixel(c(2.0, 0.0)), Err(OutOfView));
        assert_eq!(v.root_to_pixel(c(0.0, -2.0)), Err(OutOfView));
        assert_eq!(v.root_to_pixel(c(-2.0, 2.0)), Ok((0, 0)));
        assert_eq!(v.root_to_pixel(c(f64::NAN, 0.0)), Err(OutOfView));
        let unit = Viewport::new(0.0, 1.0, 0.0, 1.0, 10, 10).unwrap();
        assert_eq!(unit.root_to_pixel(c(0.05, 0.95)), Ok((0, 0)));
        assert_eq!(unit.root_to_pixel(c(0.999, 0.001)), Ok((9, 9)));
    }

    #[test]
    fn viewport_validation_and_parse() {
        assert!(Viewport::new(1.0, 1.0, 0.0, 1.0, 4, 4).is_err());
        assert!(Viewport::new(0.0, 1.0, 0.0, 1.0, 0, 4).is_err());
        assert!(Viewport::new(0.0, f64::INFINITY, 0.0, 1.0, 4, 4).is_err());
        assert_eq!(Viewport::parse("-2,2,-2,2", 4, 4).unwrap(), square4());
        assert!(Viewport::parse("-2,2,-2", 4, 4).is_err());
        assert!(Viewport::parse("a,2,-2,2", 4, 4).is_err());
    }

    #[test]
    fn accumulate_examples() {
        let v = square4();
        let mut g = DensityGrid::for_viewport(&v);
        g.accumulate(&v, std::iter::empty());
        assert_eq!(g, DensityGrid::new(4, 4));
        g.accumulate(&v, std::iter::repeat(c(0.1, 0.1)).take(5));
        g.accumulate(&v, [c(5.0, 0.0)]);
        assert_eq!(g.count_at(2, 1), 5);
        assert_eq!((g.in_view(), g.dropped()), (5, 1));
        g.set_count(0, 0, u32::MAX);
        g.accumulate(&v, [c(-1.9, 1.9)]);
        assert_eq!(g.count_at(0, 0), u32::MAX);
    }

    #[test]
    fn merge_examples() {
        let v = square4();
        let mut a = DensityGrid::for_viewport(&v);
        a.accumulate(&v, [c(0.0, 0.0), c(1.0, 1.0), c(9.0, 9.0)]);
        let mut b = DensityGrid::for_viewport(&v);
        b.accumulate(&v, [c(-1.0, -1.0)]);
        assert_eq!(a.merge(&DensityGrid::new(4, 4)).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        assert!(matches!(a.merge(&DensityGrid::new(3, 4)), Err(RasterError::DimensionMismatch { .. })));
        let mut sat = DensityGrid::new(1, 1);
        sat.set_count(0, 0, u32::MAX - 1);
        let mut one = DensityGrid::new(1, 1);
        one.set_count(0, 0, 5);
        assert_eq!(sat.merge(&one).unwrap().count_at(0, 0), u32::MAX);
    }

    #[test]
    fn render_examples() {
        let t = ToneMap::default();
        let img = render(&DensityGrid::new(3, 2), &t);
        assert!(img.data.iter().all(|&b| b == 0));

        let mut g = DensityGrid::new(3, 2);
        g.set_count(1, 1, 7);
        let img = render(&g, &t);
        assert_eq!(img.pixel(1, 1), &[255]);
        assert_eq!(img.data.iter().filter(|&&b| b != 0).count(), 1);

        let mut g = DensityGrid::new(3, 1);
        g.set_count(0, 0, 1);
        g.set_count(1, 0, 10);
        g.set_count(2, 0, 100);
        let img = render(&g, &t);
        assert!(img.data[0] < img.data[1] && img.data[1] < img.data[2]);

        let colored = render(&g, &ToneMap { palette: Palette::Inferno, ..t });
        assert_eq!(colored.channels, 3);
        assert_eq!(colored.pixel(2, 0), &Palette::Inferno.color(255));
    }

    #[test]
    fn gamma_brightens_midtones() {
        let lin = ToneMap::new(ToneMode::Linear, 1.0, Palette::Grayscale).unwrap();
        let g2 = ToneMap::new(ToneMode::Linear, 2.0, Palette::Grayscale).unwrap();
        assert!((lin.intensity(25, 100) - 0.25).abs() < 1e-15);
        assert!((g2.intensity(25, 100) - 0.5).abs() < 1e-15);
        assert!(ToneMap::new(ToneMode::Linear, 0.0, Palette::Grayscale).is_err());
    }

    #[test]
    fn netpbm_bytes() {
        let black = Image { width: 1, height: 1, channels: 1, data: vec![0] };
        assert_eq!(black.encode(), b"P5\n1 1\n255\n\x00".to_vec());
        let pair = Image { width: 2, height: 1, channels: 1, data: vec![0, 255] };
        assert_eq!(pair.encode(), b"P5\n2 1\n255\n\x00\xff".to_vec());
        let rgb = Image { width: 1, height: 1, channels: 3, data: vec![1, 2, 3] };
        assert_eq!(rgb.encode(), b"P6\n1 1\n255\n\x01\x02\x03".to_vec());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        write_image(&pair, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), pair.encode());
    }

    #[test]
    fn palettes_are_monotone_in_luma_and_black_at_zero() {
        for p in [Palette::Inferno, Palette::Viridis, Palette::Ice] {
            assert_eq!(p.color(0), [0, 0, 0]);
            assert_eq!(p.color(255), *p.stops().unwrap().last().unwrap());
        }
    }

    proptest! {
        #[test]
        fn conservation_and_split_merge(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 0..200),
            cut in 0usize..200,
        ) {
            let v = Viewport::new(-2.0, 2.0, -1.5, 2.5, 16, 9).unwrap();
            let roots: Vec<_> = pts.iter().map(|&(a, b)| c(a, b)).collect();
            let mut whole = DensityGrid::for_viewport(&v);
            whole.accumulate(&v, roots.iter().copied());
            prop_assert_eq!(whole.in_view() + whole.dropped(), roots.len() as u64);
            prop_assert_eq!(whole.counts().iter().map(|&c| c as u64).sum::<u64>(), whole.in_view());

            let cut = cut.min(roots.len());
            let mut a = DensityGrid::for_viewport(&v);
            a.accumulate(&v, roots[..cut].iter().copied());
            let mut b = DensityGrid::for_viewport(&v);
            b.accumulate(&v, roots[cut..].iter().copied());
            prop_assert_eq!(a.merge(&b).unwrap(), whole);
        }

        #[test]
        fn tone_map_is_monotone(c1 in 0u32..10_000, c2 in 0u32..10_000, max in 1u32..10_000, gamma in 0.2f64..5.0, log in any::<bool>()) {
            let mode = if log { ToneMode::Log1p } else { ToneMode::Linear };
            let t = ToneMap::new(mode, gamma, Palette::Grayscale).unwrap();
            let (lo, hi) = (c1.min(c2).min(max), c1.max(c2).min(max));
            prop_assert!(t.intensity(lo, max) <= t.intensity(hi, max));
            if lo < hi {
                prop_assert!(t.intensity(lo, max) < t.intensity(hi, max));
            }
            prop_assert!(t.level(hi, max) >= t.level(lo, max));
        }
    }
}
