//! Section images and record files.
//!
//! One pixel per grid point, `A` along the horizontal axis and `B` increasing
//! upward. In fill mode a PS pixel whose verdict agrees with its region
//! (`PS+` dispersive, `PS-` blowup) takes the overlay colour, so the green and blue
//! regions sit exactly inside red and white; any other verdict inside a PS region is
//! drawn as an even blend of the two colours. Every verdict/region combination then
//! has its own colour. Contour mode keeps the verdict colours and outlines the PS
//! regions with their overlay colours.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::classify::Verdict;
use crate::config::KeyValues;
use crate::groundstate::PsRegion;
use crate::sweep::{RecordRow, SweepRecord};
use crate::{Error, Result};

pub use crate::sweep::{read_records_csv as read_csv, write_records_csv as write_csv};

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayMode {
    FillUnder,
    Contour,
}

impl OverlayMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fill" | "fill-under" => Some(OverlayMode::FillUnder),
            "contour" => Some(OverlayMode::Contour),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette {
    pub dispersive: Rgb,
    pub blowup: Rgb,
    /// Gray rather than green: green is the PS+ overlay.
    pub indecisive: Rgb,
    pub ps_plus: Rgb,
    pub ps_minus: Rgb,
    /// Points whose datum could not be evaluated.
    pub error: Rgb,
    pub mode: OverlayMode,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            dispersive: [255, 0, 0],
            blowup: [255, 255, 255],
            indecisive: [128, 128, 128],
            ps_plus: [0, 170, 0],
            ps_minus: [0, 0, 255],
            error: [0, 0, 0],
            mode: OverlayMode::FillUnder,
        }
    }
}

/// Palette keys accepted by [`Palette::apply_keys`].
pub const PALETTE_KEYS: &[&str] =
    &["color_dispersive", "color_blowup", "color_indecisive", "color_ps_plus", "color_ps_minus", "color_error", "overlay"];

/// `#rrggbb` or `rrggbb`.
pub fn parse_hex(s: &str) -> Option<Rgb> {
    let h = s.strip_prefix('#').unwrap_or(s);
    if h.len() != 6 || !h.is_ascii() {
        return None;
    }
    let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
    Some([byte(0)?, byte(2)?, byte(4)?])
}

fn blend(x: Rgb, y: Rgb) -> Rgb {
    let m = |i: usize| ((x[i] as u16 + y[i] as u16) / 2) as u8;
    [m(0), m(1), m(2)]
}

/// What a pixel stands for: verdict (`None` for an error) and PS region (`None` when unknown).
pub type PixelClass = (Option<Verdict>, Option<PsRegion>);

const VERDICTS: [Option<Verdict>; 4] = [Some(Verdict::Dispersive), Some(Verdict::Blowup), Some(Verdict::Indecisive), None];
const REGIONS: [Option<PsRegion>; 4] = [Some(PsRegion::PsPlus), Some(PsRegion::PsMinus), Some(PsRegion::AboveThreshold), None];

impl Palette {
    pub fn apply_keys(&mut self, kv: &mut KeyValues) -> Result<()> {
        for (key, slot) in [
            ("color_dispersive", &mut self.dispersive),
            ("color_blowup", &mut self.blowup),
            ("color_indecisive", &mut self.indecisive),
            ("color_ps_plus", &mut self.ps_plus),
            ("color_ps_minus", &mut self.ps_minus),
            ("color_error", &mut self.error),
        ] {
            if let Some(v) = kv.take(key) {
                *slot = parse_hex(&v).ok_or_else(|| Error::config(format!("`{key}`: expected #rrggbb, got `{v}`")))?;
            }
        }
        if let Some(v) = kv.take("overlay") {
            self.mode = OverlayMode::parse(&v)
                .ok_or_else(|| Error::config(format!("`overlay`: expected `fill` or `contour`, got `{v}`")))?;
        }
        self.validate()
    }

    fn verdict_color(&self, v: Option<Verdict>) -> Rgb {
        match v {
            Some(Verdict::Dispersive) => self.dispersive,
            Some(Verdict::Blowup) => self.blowup,
            Some(Verdict::Indecisive) => self.indecisive,
            None => self.error,
        }
    }

    /// Fill-mode colour of one verdict/region combination.
    pub fn fill_color(&self, verdict: Option<Verdict>, region: Option<PsRegion>) -> Rgb {
        let base = self.verdict_color(verdict);
        match (region, verdict) {
            (Some(PsRegion::PsPlus), Some(Verdict::Dispersive)) => self.ps_plus,
            (Some(PsRegion::PsMinus), Some(Verdict::Blowup)) => self.ps_minus,
            (Some(PsRegion::PsPlus), _) => blend(self.ps_plus, base),
            (Some(PsRegion::PsMinus), _) => blend(self.ps_minus, base),
            _ => base,
        }
    }

    /// The five named colours must differ, and in fill mode every combination
    /// must map to its own colour.
    pub fn validate(&self) -> Result<()> {
        let named = [self.dispersive, self.blowup, self.indecisive, self.ps_plus, self.ps_minus];
        for i in 0..named.len() {
            for j in i + 1..named.len() {
                if named[i] == named[j] {
                    return Err(Error::config("palette colours must be pairwise distinct"));
                }
            }
        }
        if self.mode == OverlayMode::FillUnder {
            let mut seen: HashMap<Rgb, PixelClass> = HashMap::new();
            for (rgb, class) in self.fill_table() {
                if let Some(prev) = seen.insert(rgb, class) {
                    if Self::same_fill(prev, class) {
                        continue;
                    }
                    return Err(Error::config(format!(
                        "palette maps {prev:?} and {class:?} to the same colour {rgb:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    // above-threshold and unknown regions are drawn alike
    fn same_fill(x: PixelClass, y: PixelClass) -> bool {
        let plain = |r: Option<PsRegion>| !matches!(r, Some(PsRegion::PsPlus | PsRegion::PsMinus));
        x.0 == y.0 && plain(x.1) && plain(y.1)
    }

    fn fill_table(&self) -> Vec<(Rgb, PixelClass)> {
        let mut out = Vec::new();
        for v in VERDICTS {
            for r in REGIONS {
                out.push((self.fill_color(v, r), (v, r)));
            }
        }
        out
    }

    /// Inverse of [`fill_color`](Self::fill_color). Regions outside PS come back as
    /// `AboveThreshold`.
    pub fn decode(&self, rgb: Rgb) -> Option<PixelClass> {
        self.fill_table().into_iter().find(|(c, _)| *c == rgb).map(|(_, (v, r))| {
            let r = match r {
                Some(PsRegion::PsPlus | PsRegion::PsMinus) => r,
                _ => Some(PsRegion::AboveThreshold),
            };
            (v, r)
        })
    }
}

/// One grid point as far as rendering is concerned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub verdict: Option<Verdict>,
    pub region: Option<PsRegion>,
}

impl From<&RecordRow> for SectionPoint {
    fn from(r: &RecordRow) -> Self {
        Self { a: r.a, b: r.b, c: r.c, verdict: r.verdict(), region: r.ps_region() }
    }
}

impl From<&SweepRecord> for SectionPoint {
    fn from(r: &SweepRecord) -> Self {
        Self { a: r.a, b: r.b, c: r.c, verdict: r.verdict(), region: r.ps.map(|p| p.region) }
    }
}

/// Distinct `C` values in first-seen order.
pub fn sections(points: &[SectionPoint]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for p in points {
        if !out.iter().any(|c| c.to_bits() == p.c.to_bits()) {
            out.push(p.c);
        }
    }
    out
}

/// Points of the section `C = c`.
pub fn select_section(points: &[SectionPoint], c: f64) -> Vec<SectionPoint> {
    points.iter().filter(|p| p.c == c).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB, top row first.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Binary P6 encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        self.to_ppm_with_comment(None)
    }

    /// P6 with a `#` comment line after the magic number.
    pub fn to_ppm_with_comment(&self, comment: Option<&str>) -> Vec<u8> {
        let note = comment.map(|c| format!("# {}\n", c.replace('\n', " "))).unwrap_or_default();
        let mut out = format!("P6\n{note}{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

fn sorted_distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| x == y);
    v
}

/// Renders one full `(A, B)` section. Every `(a, b)` combination of the distinct
/// coordinates present must appear exactly once.
pub fn render_section(points: &[SectionPoint], palette: &Palette) -> Result<Image> {
    palette.validate()?;
    if points.is_empty() {
        return Err(Error::Input("no records to render".into()));
    }
    let cs = sections(points);
    if cs.len() > 1 {
        return Err(Error::Input(format!("records hold {} sections (C values); render one at a time", cs.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.a.is_finite() && p.b.is_finite())) {
        return Err(Error::Input(format!("non-finite coordinate ({}, {})", p.a, p.b)));
    }
    let a = sorted_distinct(points.iter().map(|p| p.a));
    let b = sorted_distinct(points.iter().map(|p| p.b));
    let (w, h) = (a.len(), b.len());
    let mut cells: BTreeMap<(usize, usize), &SectionPoint> = BTreeMap::new();
    for p in points {
        let x = a.partition_point(|v| *v < p.a);
        // B increases upward: the largest b is the top row
        let y = h - 1 - b.partition_point(|v| *v < p.b);
        if cells.insert((x, y), p).is_some() {
            return Err(Error::Input(format!("point ({}, {}) appears more than once", p.a, p.b)));
        }
    }
    if cells.len() != w * h {
        let mut missing = Vec::new();
        for (yi, bv) in b.iter().rev().enumerate() {
            for (xi, av) in a.iter().enumerate() {
                if !cells.contains_key(&(xi, yi)) {
                    missing.push((*av, *bv));
                }
            }
        }
        return Err(Error::IncompleteGrid(missing));
    }

    let mut pixels = Vec::with_capacity(3 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = cells[&(x, y)];
            let rgb = match palette.mode {
                OverlayMode::FillUnder => palette.fill_color(p.verdict, p.region),
                OverlayMode::Contour => {
                    let on_edge = |r: PsRegion| {
                        p.region == Some(r)
                            && [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].iter().any(|(dx, dy)| {
                                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                                nx < 0
                                    || ny < 0
                                    || nx >= w as i64
                                    || ny >= h as i64
                                    || cells[&(nx as usize, ny as usize)].region != Some(r)
                            })
                    };
                    if on_edge(PsRegion::PsPlus) {
                        palette.ps_plus
                    } else if on_edge(PsRegion::PsMinus) {
                        palette.ps_minus
                    } else {
                        palette.verdict_color(p.verdict)
                    }
                }
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    Ok(Image { width: w, height: h, pixels })
}

pub fn write_ppm(image: &Image, path: &Path, comment: Option<&str>) -> Result<()> {
    std::fs::write(path, image.to_ppm_with_comment(comment))?;
    Ok(())
}
