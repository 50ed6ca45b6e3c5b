//! Orthographic skeleton plots.
//!
//! The camera looks horizontally at the scene after a rotation of
//! `azimuth_deg` about the vertical (y) axis; +y points up in the image.
//! Inputs are green, predictions red and ground truth blue. One framing is
//! shared by every image of a render so the frames line up.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageFormat, Rgb, RgbImage};
use posecast_core::motion_data::{JointLayout, PoseTensor};
use serde::{Deserialize, Serialize};

pub const INPUT_COLOR: Rgb<u8> = Rgb([0, 160, 0]);
pub const PREDICTION_COLOR: Rgb<u8> = Rgb([220, 0, 0]);
pub const TARGET_COLOR: Rgb<u8> = Rgb([0, 0, 220]);
pub const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("joint layout has no edges to draw")]
    NoEdges,
    #[error("{what} has {got} joints per person, layout has {expected}")]
    Joints { what: &'static str, expected: usize, got: usize },
    #[error("prediction shape {0:?} differs from target shape {1:?}")]
    Shape([usize; 3], [usize; 3]),
    #[error("invalid render settings: {0}")]
    Settings(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub azimuth_deg: f64,
    /// Per-frame images, spread evenly over the forecast horizon.
    pub frames: usize,
    /// Border around the framed points, pixels.
    pub margin: u32,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self { width: 640, height: 480, azimuth_deg: 30.0, frames: 0, margin: 16 }
    }
}

/// World-to-pixel mapping fitted to a set of points.
#[derive(Debug, Clone, Copy)]
struct Camera {
    cos: f64,
    sin: f64,
    scale: f64,
    center: [f64; 2],
    size: [f64; 2],
}

impl Camera {
    fn rotate(&self, p: [f64; 3]) -> [f64; 2] {
        [self.cos * p[0] + self.sin * p[2], p[1]]
    }

    fn fit(spec: &RenderSpec, tensors: &[&PoseTensor]) -> Self {
        let a = spec.azimuth_deg.to_radians();
        let mut cam = Self { cos: a.cos(), sin: a.sin(), scale: 1.0, center: [0.0; 2], size: [0.0; 2] };
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for t in tensors {
            for p in t.data().chunks_exact(3) {
                let q = cam.rotate([p[0], p[1], p[2]]);
                for k in 0..2 {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
            }
        }
        let usable = [
            (spec.width as f64 - 2.0 * spec.margin as f64).max(1.0),
            (spec.height as f64 - 2.0 * spec.margin as f64).max(1.0),
        ];
        let extent = [(hi[0] - lo[0]).max(1.0), (hi[1] - lo[1]).max(1.0)];
        cam.scale = (usable[0] / extent[0]).min(usable[1] / extent[1]);
        cam.center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        cam.size = [spec.width as f64, spec.height as f64];
        cam
    }

    fn project(&self, p: [f64; 3]) -> (i64, i64) {
        let q = self.rotate(p);
        let x = self.size[0] / 2.0 + (q[0] - self.center[0]) * self.scale;
        let y = self.size[1] / 2.0 - (q[1] - self.center[1]) * self.scale;
        (x.round() as i64, y.round() as i64)
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

/// Bresenham line, endpoints included.
fn line(img: &mut RgbImage, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn draw_pose(img: &mut RgbImage, cam: &Camera, poses: &PoseTensor, frame: usize, edges: &[[usize; 2]], color: Rgb<u8>) {
    for p in 0..poses.persons() {
        for &[a, b] in edges {
            line(img, cam.project(poses.point(frame, p, a)), cam.project(poses.point(frame, p, b)), color);
        }
    }
}

/// The images of one render, before they are written.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub composite: RgbImage,
    pub frames: Vec<RgbImage>,
}

fn check(layout: &JointLayout, input: &PoseTensor, pred: &PoseTensor, target: &PoseTensor) -> Result<(), RenderError> {
    if layout.edges().is_empty() {
        return Err(RenderError::NoEdges);
    }
    for (what, t) in [("input", input), ("prediction", pred), ("target", target)] {
        if t.joints() != layout.len() {
            return Err(RenderError::Joints { what, expected: layout.len(), got: t.joints() });
        }
    }
    if pred.shape() != target.shape() {
        return Err(RenderError::Shape(pred.shape(), target.shape()));
    }
    Ok(())
}

/// Output frame shown by per-frame image `k` of `n`: evenly spaced, ending
/// on the last frame.
pub fn frame_for(k: usize, n: usize, t_out: usize) -> usize {
    ((k + 1) * t_out).div_ceil(n).saturating_sub(1).min(t_out - 1)
}

/// Composite: every input frame, then every target frame, then every
/// predicted frame. Frame `k`: the last input pose, then target and
/// prediction at that output step.
pub fn render(
    layout: &JointLayout,
    input: &PoseTensor,
    pred: &PoseTensor,
    target: &PoseTensor,
    spec: &RenderSpec,
) -> Result<Rendered, RenderError> {
    check(layout, input, pred, target)?;
    if spec.width == 0 || spec.height == 0 {
        return Err(RenderError::Settings("image size must be positive".into()));
    }
    if pred.frames() == 0 && spec.frames > 0 {
        return Err(RenderError::Settings("no output frames to render".into()));
    }
    let cam = Camera::fit(spec, &[input, pred, target]);
    let edges = layout.edges();
    let blank = || RgbImage::from_pixel(spec.width, spec.height, BACKGROUND);

    let mut composite = blank();
    for (poses, color) in [(input, INPUT_COLOR), (target, TARGET_COLOR), (pred, PREDICTION_COLOR)] {
        for f in 0..poses.frames() {
            draw_pose(&mut composite, &cam, poses, f, edges, color);
        }
    }
    let frames = (0..spec.frames)
        .map(|k| {
            let f = frame_for(k, spec.frames, pred.frames());
            let mut img = blank();
            if input.frames() > 0 {
                draw_pose(&mut img, &cam, input, input.frames() - 1, edges, INPUT_COLOR);
            }
            draw_pose(&mut img, &cam, target, f, edges, TARGET_COLOR);
            draw_pose(&mut img, &cam, pred, f, edges, PREDICTION_COLOR);
            img
        })
        .collect();
    Ok(Rendered { composite, frames })
}

fn save_png(img: &RgbImage, path: &Path) -> Result<(), RenderError> {
    img.save_with_format(path, ImageFormat::Png).map_err(|source| RenderError::Image { path: path.to_path_buf(), source })
}

/// Writes `composite.png` and `frame_000.png`, ... into `dir`; returns every
/// path written.
pub fn write_render(rendered: &Rendered, dir: &Path) -> Result<Vec<PathBuf>, RenderError> {
    fs::create_dir_all(dir).map_err(|source| RenderError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = vec![dir.join("composite.png")];
    save_png(&rendered.composite, &paths[0])?;
    for (k, img) in rendered.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{k:03}.png"));
        save_png(img, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use posecast_core::motion_data::{make_windows, synth_corpus, MotionParams, PersonMode, WindowSpec};

    fn window() -> (PoseTensor, PoseTensor) {
        let seq = synth_corpus(4, 1, 25.0, 30, 1, &MotionParams::default()).unwrap();
        let w = make_windows(&seq[0], &WindowSpec::new(10, 5, 1).unwrap(), PersonMode::Separate).remove(0);
        (w.input, w.target)
    }

    fn mask(img: &RgbImage, color: Rgb<u8>) -> Vec<bool> {
        img.pixels().map(|p| *p == color).collect()
    }

    #[test]
    fn identical_prediction_hides_target_exactly() {
        let (input, target) = window();
        let layout = JointLayout::default13();
        let spec = RenderSpec { frames: 2, ..Default::default() };
        let r = render(&layout, &input, &target, &target, &spec).unwrap();
        assert!(!mask(&r.composite, TARGET_COLOR).iter().any(|&m| m));
        for img in &r.frames {
            assert!(!mask(img, TARGET_COLOR).iter().any(|&m| m));
        }

        // red alone and blue alone cover the same pixels
        let cam = Camera::fit(&spec, &[&input, &target, &target]);
        let (mut a, mut b) = (RgbImage::from_pixel(640, 480, BACKGROUND), RgbImage::from_pixel(640, 480, BACKGROUND));
        for f in 0..target.frames() {
            draw_pose(&mut a, &cam, &target, f, layout.edges(), PREDICTION_COLOR);
            draw_pose(&mut b, &cam, &target, f, layout.edges(), TARGET_COLOR);
        }
        assert_eq!(mask(&a, PREDICTION_COLOR), mask(&b, TARGET_COLOR));
        assert!(mask(&a, PREDICTION_COLOR).iter().any(|&m| m));
    }

    #[test]
    fn colors_appear_where_expected() {
        let (input, target) = window();
        let mut pred = target.clone();
        pred.translate([300.0, 0.0, 0.0]);
        let r = render(&JointLayout::default13(), &input, &pred, &target, &RenderSpec::default()).unwrap();
        for c in [INPUT_COLOR, PREDICTION_COLOR, TARGET_COLOR] {
            assert!(mask(&r.composite, c).iter().any(|&m| m));
        }
    }

    #[test]
    fn writes_composite_and_requested_frames_deterministically() {
        let (input, target) = window();
        let spec = RenderSpec { frames: 3, ..Default::default() };
        let r = render(&JointLayout::default13(), &input, &target, &target, &spec).unwrap();
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let p1 = write_render(&r, d1.path()).unwrap();
        let r2 = render(&JointLayout::default13(), &input, &target, &target, &spec).unwrap();
        let p2 = write_render(&r2, d2.path()).unwrap();
        assert_eq!(p1.len(), 4);
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
        assert_eq!((0..3).map(|k| frame_for(k, 3, 5)).collect::<Vec<_>>(), [1, 3, 4]);
        assert_eq!(frame_for(0, 1, 25), 24);
    }

    #[test]
    fn layout_without_edges_is_rejected() {
        let (input, target) = window();
        let names: Vec<String> = (0..13).map(|i| format!("j{i}")).collect();
        let bare = JointLayout::new(names, 0, 1, vec![]).unwrap();
        assert!(matches!(render(&bare, &input, &target, &target, &RenderSpec::default()), Err(RenderError::NoEdges)));
    }
}
