use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::Vertex2D;
use crate::program::BlockProgram;

pub const BUILDING_RGB: [u8; 3] = [0x1f, 0x4f, 0xd8];
pub const GREENSPACE_RGB: [u8; 3] = [0x2e, 0x9e, 0x44];
pub const BACKGROUND_RGB: [u8; 3] = [0xff, 0xff, 0xff];

/// An sRGB colour written as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub [u8; 3]);

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("#{}", hex::encode(self.0)))
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut rgb = [0u8; 3];
        hex::decode_to_slice(text.trim_start_matches('#'), &mut rgb)
            .map_err(|_| serde::de::Error::custom(format!("`{text}` is not a #rrggbb colour")))?;
        Ok(Rgb(rgb))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub building: Rgb,
    pub greenspace: Rgb,
    pub background: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Self { building: Rgb(BUILDING_RGB), greenspace: Rgb(GREENSPACE_RGB), background: Rgb(BACKGROUND_RGB) }
    }
}

/// An RGB image, row-major, row 0 at the north edge of the region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Raster {
    fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, pixels }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn count(&self, rgb: [u8; 3]) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == rgb).count()
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().expect("in-memory png header");
            writer.write_image_data(&self.pixels).expect("in-memory png data");
        }
        out
    }
}

/// Fills `polygon` by sampling pixel centres, scanline by scanline.
fn fill(r: &mut Raster, polygon: &[Vertex2D], sx: f64, sy: f64, region_h: f64, rgb: [u8; 3]) {
    let n = polygon.len();
    let mut xs = Vec::new();
    for row in 0..r.height {
        let y = region_h - (row as f64 + 0.5) * sy;
        xs.clear();
        for i in 0..n {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            if (a.y <= y) != (b.y <= y) {
                xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            // pixel col c is covered when span[0] <= (c + 0.5) * sx < span[1]
            let first = ((span[0] / sx - 0.5).ceil().max(0.0)) as u32;
            let end = ((span[1] / sx - 0.5).ceil().max(0.0) as u32).min(r.width);
            for col in first..end {
                let i = (row as usize * r.width as usize + col as usize) * 3;
                r.pixels[i..i + 3].copy_from_slice(&rgb);
            }
        }
    }
}

/// Top-down view of the block: greenspace then buildings over a white
/// background, north up. The longer region side spans `resolution` pixels.
pub fn render_topdown(program: &BlockProgram, resolution: u32) -> Raster {
    render_topdown_with(program, resolution, &Palette::default())
}

pub fn render_topdown_with(program: &BlockProgram, resolution: u32, palette: &Palette) -> Raster {
    let resolution = resolution.max(1);
    let (w, h) = (program.region.width, program.region.height);
    let long = w.max(h);
    let side = |len: f64| ((len / long * resolution as f64).round() as u32).max(1);
    let (pw, ph) = if long > 0.0 && long.is_finite() { (side(w), side(h)) } else { (resolution, resolution) };
    let mut raster = Raster::filled(pw, ph, palette.background.0);
    if !(long > 0.0 && long.is_finite()) {
        return raster;
    }
    let (sx, sy) = (w / pw as f64, h / ph as f64);
    for e in program.greenspaces() {
        fill(&mut raster, e.polygon.vertices(), sx, sy, h, palette.greenspace.0);
    }
    for e in program.buildings() {
        fill(&mut raster, e.polygon.vertices(), sx, sy, h, palette.building.0);
    }
    raster
}
