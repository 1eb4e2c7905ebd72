//! Image to polynetwork pipeline: IDX loading, binarization, border following,
//! polygon approximation and gradient-change corner nodes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spn::{NodeId, StatePolynetwork};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Contract(format!("{} pixels for {width}x{height}", pixels.len())));
        }
        Ok(GrayImage { width, height, pixels })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub images: Vec<GrayImage>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sample indices grouped by label.
    pub fn by_class(&self) -> BTreeMap<u8, Vec<usize>> {
        let mut m: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            m.entry(*l).or_default().push(i);
        }
        m
    }
}

fn be_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::Format("truncated IDX header".into()))
}

/// Parses IDX image and label buffers.
pub fn parse_mnist(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    if be_u32(images, 0)? != 0x0803 {
        return Err(Error::Format("bad IDX image magic".into()));
    }
    if be_u32(labels, 0)? != 0x0801 {
        return Err(Error::Format("bad IDX label magic".into()));
    }
    let n = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let nl = be_u32(labels, 4)? as usize;
    if n != nl {
        return Err(Error::Format(format!("{n} images but {nl} labels")));
    }
    let size = rows * cols;
    let body = images.get(16..16 + n * size).ok_or_else(|| Error::Format("truncated IDX images".into()))?;
    let lab = labels.get(8..8 + n).ok_or_else(|| Error::Format("truncated IDX labels".into()))?;
    if let Some(l) = lab.iter().find(|l| **l > 9) {
        return Err(Error::Format(format!("label {l} out of range")));
    }
    Ok(Dataset {
        images: body.chunks(size).map(|c| GrayImage { width: cols, height: rows, pixels: c.to_vec() }).collect(),
        labels: lab.to_vec(),
    })
}

pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    parse_mnist(&std::fs::read(images_path)?, &std::fs::read(labels_path)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryImage {
    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.bits[y as usize * self.width + x as usize]
    }

    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let bits = rows.iter().flat_map(|r| r.chars().map(|c| c != '.' && c != '0')).collect();
        BinaryImage { width, height, bits }
    }
}

/// Bit set iff the pixel is at least `threshold * 255`.
pub fn binarize(image: &GrayImage, threshold: f64) -> Result<BinaryImage> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Contract(format!("threshold {threshold} outside (0, 1)")));
    }
    let cut = threshold * 255.0;
    Ok(BinaryImage {
        width: image.width,
        height: image.height,
        bits: image.pixels.iter().map(|p| f64::from(*p) >= cut).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Cw,
    Ccw,
}

/// Closed border of foreground pixels, as `(x, y)` pixel coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<(i64, i64)>,
    pub hole: bool,
    pub orientation: Orientation,
    pub closed: bool,
}

/// Twice the signed area with y pointing down; positive means clockwise on screen.
fn signed_area2(points: &[(i64, i64)]) -> i64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

// Neighbour offsets (dy, dx), clockwise on screen starting east.
const RING: [(i64, i64); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

fn ring_index(dy: i64, dx: i64) -> usize {
    RING.iter().position(|d| *d == (dy, dx)).expect("neighbour offset")
}

/// Border following over 8-connected foreground. Outer borders come out
/// clockwise and hole borders counter-clockwise.
pub fn extract_contours(bin: &BinaryImage) -> Vec<Contour> {
    let (w, h) = (bin.width as i64 + 2, bin.height as i64 + 2);
    let mut f = vec![0i32; (w * h) as usize];
    for y in 0..bin.height {
        for x in 0..bin.width {
            if bin.bits[y * bin.width + x] {
                f[((y as i64 + 1) * w + x as i64 + 1) as usize] = 1;
            }
        }
    }
    let at = |f: &Vec<i32>, i: i64, j: i64| f[(i * w + j) as usize];
    let mut out = Vec::new();
    let mut nbd = 1;
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            let v = at(&f, i, j);
            let start = if v == 1 && at(&f, i, j - 1) == 0 {
                Some((false, (i, j - 1)))
            } else if v >= 1 && at(&f, i, j + 1) == 0 {
                Some((true, (i, j + 1)))
            } else {
                None
            };
            let Some((hole, (i2, j2))) = start else { continue };
            nbd += 1;
            let first = ring_index(i2 - i, j2 - j);
            let found = (0..8).map(|k| (first + k) % 8).find(|k| at(&f, i + RING[*k].0, j + RING[*k].1) != 0);
            let mut points = vec![(j - 1, i - 1)];
            let Some(k1) = found else {
                f[(i * w + j) as usize] = -nbd;
                out.push(Contour { points, hole, orientation: Orientation::Cw, closed: true });
                continue;
            };
            let (i1, j1) = (i + RING[k1].0, j + RING[k1].1);
            let (mut i2, mut j2) = (i1, j1);
            let (mut i3, mut j3) = (i, j);
            loop {
                // counter-clockwise from the element after (i2, j2)
                let from = ring_index(i2 - i3, j2 - j3);
                let mut east_zero = false;
                let mut i4j4 = (i3, j3);
                for k in 1..=8 {
                    let idx = (from + 8 - k) % 8;
                    let (y, x) = (i3 + RING[idx].0, j3 + RING[idx].1);
                    if idx == 0 && at(&f, y, x) == 0 {
                        east_zero = true;
                    }
                    if at(&f, y, x) != 0 {
                        i4j4 = (y, x);
                        break;
                    }
                }
                let cell = (i3 * w + j3) as usize;
                if east_zero {
                    f[cell] = -nbd;
                } else if f[cell] == 1 {
                    f[cell] = nbd;
                }
                if i4j4 == (i, j) && (i3, j3) == (i1, j1) {
                    break;
                }
                (i2, j2) = (i3, j3);
                (i3, j3) = i4j4;
                points.push((j3 - 1, i3 - 1));
            }
            if points.len() > 1 && points.last() == points.first() {
                points.pop();
            }
            let mut c = Contour { points, hole, orientation: Orientation::Cw, closed: true };
            normalize_orientation(&mut c);
            out.push(c);
        }
    }
    out
}

fn normalize_orientation(c: &mut Contour) {
    let want_cw = !c.hole;
    let a = signed_area2(&c.points);
    if a != 0 && (a > 0) != want_cw {
        c.points[1..].reverse();
    }
    c.orientation = if want_cw { Orientation::Cw } else { Orientation::Ccw };
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((p.0 - a.0).powi(2) + (p.1 - a.1).powi(2)).sqrt();
    }
    ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len2.sqrt()
}

fn rdp(pts: &[(f64, f64)], eps: f64, keep: &mut Vec<bool>, offset: usize) {
    if pts.len() < 3 {
        return;
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let (k, d) = pts[1..pts.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1, seg_dist(*p, a, b)))
        .fold((0, -1.0), |m, x| if x.1 > m.1 { x } else { m });
    if d > eps {
        keep[offset + k] = true;
        rdp(&pts[..=k], eps, keep, offset);
        rdp(&pts[k..], eps, keep, offset + k);
    }
}

/// Closed contour length.
pub fn arc_length(points: &[(i64, i64)]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            (((b.0 - a.0).pow(2) + (b.1 - a.1).pow(2)) as f64).sqrt()
        })
        .sum()
}

/// Ramer-Douglas-Peucker on a closed contour with tolerance
/// `epsilon_fraction * arc_length`. Corner order follows the contour.
pub fn approximate_polygon(contour: &Contour, epsilon_fraction: f64) -> Result<Vec<(i64, i64)>> {
    let n = contour.points.len();
    if n < 3 {
        return Err(Error::Contract(format!("contour with {n} points")));
    }
    let eps = epsilon_fraction * arc_length(&contour.points);
    let pts: Vec<(f64, f64)> = contour.points.iter().map(|p| (p.0 as f64, p.1 as f64)).collect();
    let far = (1..n)
        .max_by(|a, b| {
            let d = |i: usize| (pts[i].0 - pts[0].0).powi(2) + (pts[i].1 - pts[0].1).powi(2);
            d(*a).total_cmp(&d(*b)).then(b.cmp(a))
        })
        .expect("n >= 3");
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    let mut closed = pts.clone();
    closed.push(pts[0]);
    rdp(&closed[..=far], eps, &mut keep, 0);
    rdp(&closed[far..], eps, &mut keep, far);
    let mut corners: Vec<usize> = (0..n).filter(|i| keep[*i]).collect();
    // the start point is kept only if it is a corner in its own right
    if corners.len() > 3 {
        let (prev, next) = (corners[corners.len() - 1], corners[1]);
        if seg_dist(pts[0], pts[prev], pts[next]) <= eps {
            corners.remove(0);
        }
    }
    Ok(corners.into_iter().map(|i| contour.points[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    fn of(v: i64) -> Option<Sign> {
        match v.signum() {
            1 => Some(Sign::Pos),
            -1 => Some(Sign::Neg),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Sign::Pos => "pos",
            Sign::Neg => "neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerNode {
    pub position: (i64, i64),
    pub convex: bool,
    pub x_change: Option<(Sign, Sign)>,
    pub y_change: Option<(Sign, Sign)>,
    /// Index of the polygon the corner came from.
    pub polygon: usize,
}

impl CornerNode {
    /// e.g. `cx_ypos_yneg`, `cc_xneg_xpos_ypos_yneg`.
    pub fn type_label(&self) -> String {
        let mut s = String::from(if self.convex { "cx" } else { "cc" });
        for (axis, ch) in [("x", self.x_change), ("y", self.y_change)] {
            if let Some((a, b)) = ch {
                s.push_str(&format!("_{axis}{}_{axis}{}", a.label(), b.label()));
            }
        }
        s
    }
}

/// Gradient of the edge `a -> b` with foreground on the right of travel on screen.
fn edge_gradient(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    (-dy, dx)
}

/// Corners where the x or y gradient sign changes along the polygon.
///
/// Zero components do not break a sign run; a change across a run of zero
/// edges is assigned to every corner bounding that run.
pub fn gradient_nodes(polygon: &[(i64, i64)], index: usize) -> Vec<CornerNode> {
    let n = polygon.len();
    if n < 3 {
        return vec![];
    }
    // edge i runs from corner i to corner i+1
    let grads: Vec<(i64, i64)> = (0..n).map(|i| edge_gradient(polygon[i], polygon[(i + 1) % n])).collect();
    let axis_changes = |comp: &dyn Fn((i64, i64)) -> i64| -> Vec<Option<(Sign, Sign)>> {
        let mut at = vec![None; n];
        let signs: Vec<Option<Sign>> = grads.iter().map(|g| Sign::of(comp(*g))).collect();
        if signs.iter().all(Option::is_none) {
            return at;
        }
        for e in 0..n {
            let Some(to) = signs[e] else { continue };
            // walk back over zero edges to the previous signed edge
            let mut k = (e + n - 1) % n;
            let mut gap = vec![e];
            while signs[k].is_none() {
                gap.push(k);
                k = (k + n - 1) % n;
            }
            let from = signs[k].expect("signed edge");
            if from != to {
                // corners e, e-1, ... down to the end of edge k
                for c in gap {
                    at[c] = Some((from, to));
                }
            }
        }
        at
    };
    let xs = axis_changes(&|g| g.0);
    let ys = axis_changes(&|g| g.1);
    (0..n)
        .filter(|i| xs[*i].is_some() || ys[*i].is_some())
        .map(|i| {
            let prev = polygon[(i + n - 1) % n];
            let (a, b) = ((polygon[i].0 - prev.0, polygon[i].1 - prev.1), (polygon[(i + 1) % n].0 - polygon[i].0, polygon[(i + 1) % n].1 - polygon[i].1));
            CornerNode {
                position: polygon[i],
                convex: a.0 * b.1 - a.1 * b.0 >= 0,
                x_change: xs[i],
                y_change: ys[i],
                polygon: index,
            }
        })
        .collect()
}

pub const SN_KEYS: [&str; 8] = ["contour_h", "contour_v", "inner_h", "inner_v", "outer_h", "outer_v", "all_h", "all_v"];

/// Region crossed by the straight segment between two pixels, ignoring the
/// endpoint pixels themselves. `None` when the segment touches both regions or
/// no sample remains.
fn segment_region(bin: &BinaryImage, a: (i64, i64), b: (i64, i64), step: f64) -> Option<bool> {
    let len = (((b.0 - a.0).pow(2) + (b.1 - a.1).pow(2)) as f64).sqrt();
    let k = (len / step).ceil() as usize;
    let mut region = None;
    for s in 0..=k {
        let t = s as f64 / k.max(1) as f64;
        let x = (a.0 as f64 + t * (b.0 - a.0) as f64).round() as i64;
        let y = (a.1 as f64 + t * (b.1 - a.1) as f64).round() as i64;
        if (x, y) == a || (x, y) == b {
            continue;
        }
        let v = bin.get(x, y);
        match region {
            None => region = Some(v),
            Some(r) if r != v => return None,
            _ => {}
        }
    }
    region
}

/// Builds the eight keyed networks over the gradient-change corners.
pub fn build_spn<T: Scalar>(polygons: &[Vec<(i64, i64)>], bin: &BinaryImage) -> StatePolynetwork<T> {
    let mut p = StatePolynetwork::<T>::new(&SN_KEYS);
    let mut nodes: Vec<(NodeId, CornerNode)> = Vec::new();
    let mut along: Vec<(NodeId, NodeId)> = Vec::new();
    for (pi, poly) in polygons.iter().enumerate() {
        let corners = gradient_nodes(poly, pi);
        let ids: Vec<NodeId> = corners
            .iter()
            .map(|c| p.add_node(&c.type_label(), Some([T::lit(c.position.0 as f64), T::lit(c.position.1 as f64)])))
            .collect();
        if ids.len() > 1 {
            for i in 0..ids.len() {
                let j = (i + 1) % ids.len();
                if ids.len() > 2 || i == 0 {
                    along.push((ids[i], ids[j]));
                }
            }
        }
        nodes.extend(ids.into_iter().zip(corners));
    }
    let pos: BTreeMap<NodeId, (i64, i64)> = nodes.iter().map(|(id, c)| (*id, c.position)).collect();
    let link = |p: &mut StatePolynetwork<T>, kind: &str, a: NodeId, b: NodeId| {
        let (pa, pb) = (pos[&a], pos[&b]);
        let h = match pa.0.cmp(&pb.0) {
            std::cmp::Ordering::Less => Some((a, b)),
            std::cmp::Ordering::Greater => Some((b, a)),
            std::cmp::Ordering::Equal => None,
        };
        let v = match pa.1.cmp(&pb.1) {
            std::cmp::Ordering::Less => Some((a, b)),
            std::cmp::Ordering::Greater => Some((b, a)),
            std::cmp::Ordering::Equal => None,
        };
        if let Some((x, y)) = h {
            p.add_edge(&format!("{kind}_h"), x, y).expect("known nodes");
        }
        if let Some((x, y)) = v {
            p.add_edge(&format!("{kind}_v"), x, y).expect("known nodes");
        }
    };
    for (a, b) in along {
        link(&mut p, "contour", a, b);
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (a, b) = (nodes[i].0, nodes[j].0);
            link(&mut p, "all", a, b);
            match segment_region(bin, pos[&a], pos[&b], 0.25) {
                Some(true) => link(&mut p, "inner", a, b),
                Some(false) => link(&mut p, "outer", a, b),
                None => {}
            }
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisionConfig {
    pub threshold: f64,
    pub epsilon_fraction: f64,
}

impl Default for VisionConfig {
    fn default() -> Self {
        VisionConfig { threshold: 0.5, epsilon_fraction: 0.01 }
    }
}

/// Full pipeline. Also returns how many contours were too short to approximate.
pub fn image_to_spn<T: Scalar>(image: &GrayImage, cfg: &VisionConfig) -> Result<(StatePolynetwork<T>, usize)> {
    let bin = binarize(image, cfg.threshold)?;
    let mut skipped = 0;
    let polygons: Vec<Vec<(i64, i64)>> = extract_contours(&bin)
        .iter()
        .filter_map(|c| match approximate_polygon(c, cfg.epsilon_fraction) {
            Ok(p) => Some(p),
            Err(_) => {
                skipped += 1;
                None
            }
        })
        .collect();
    Ok((build_spn(&polygons, &bin), skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> BinaryImage {
        BinaryImage::from_rows(&[".......", ".#####.", ".#####.", ".#####.", ".#####.", "......."])
    }

    #[test]
    fn idx_header_checks() {
        let mut img = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2];
        img.extend([0, 255, 128, 7]);
        let lab = vec![0, 0, 8, 1, 0, 0, 0, 1, 5];
        let d = parse_mnist(&img, &lab).unwrap();
        assert_eq!(d.images[0].pixels, vec![0, 255, 128, 7]);
        assert_eq!(d.labels, vec![5]);
        let mut bad = img.clone();
        bad[3] = 2;
        assert!(matches!(parse_mnist(&bad, &lab), Err(Error::Format(_))));
        assert!(parse_mnist(&img[..18], &lab).is_err());
        let lab2 = vec![0, 0, 8, 1, 0, 0, 0, 2, 5, 1];
        assert!(parse_mnist(&img, &lab2).is_err());
    }

    #[test]
    fn binarize_boundary() {
        let img = GrayImage::new(3, 1, vec![0, 127, 128]).unwrap();
        assert_eq!(binarize(&img, 0.5).unwrap().bits, vec![false, false, true]);
        assert!(binarize(&img, 1.0).is_err());
    }

    #[test]
    fn square_is_one_cw_outer() {
        let cs = extract_contours(&square());
        assert_eq!(cs.len(), 1);
        assert!(!cs[0].hole);
        assert!(signed_area2(&cs[0].points) > 0);
        assert_eq!(cs[0].points.len(), 14);
        let poly = approximate_polygon(&cs[0], 0.01).unwrap();
        assert_eq!(poly, vec![(1, 1), (5, 1), (5, 4), (1, 4)]);
    }

    #[test]
    fn ring_has_ccw_hole() {
        let b = BinaryImage::from_rows(&["#####", "#...#", "#...#", "#####"]);
        let cs = extract_contours(&b);
        assert_eq!(cs.len(), 2);
        let hole = cs.iter().find(|c| c.hole).unwrap();
        assert_eq!(hole.orientation, Orientation::Ccw);
        assert!(signed_area2(&hole.points) < 0);
    }

    #[test]
    fn empty_and_single_pixel() {
        assert!(extract_contours(&BinaryImage::from_rows(&["...", "..."])).is_empty());
        let cs = extract_contours(&BinaryImage::from_rows(&["...", ".#."]));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].points, vec![(1, 1)]);
        assert!(approximate_polygon(&cs[0], 0.01).is_err());
    }

    #[test]
    fn rectangle_corner_types() {
        let poly = vec![(0, 0), (4, 0), (4, 3), (0, 3)];
        let nodes = gradient_nodes(&poly, 0);
        assert_eq!(nodes.len(), 4);
        let tr = nodes.iter().find(|n| n.position == (4, 0)).unwrap();
        assert!(tr.convex);
        assert_eq!(tr.x_change, Some((Sign::Pos, Sign::Neg)));
        assert_eq!(tr.y_change, Some((Sign::Pos, Sign::Neg)));
        assert!(nodes.iter().all(|n| n.x_change.is_some() && n.y_change.is_some()));
    }

    #[test]
    fn pointed_top_right_is_y_change() {
        // both edges at the corner descend, so only the y sign flips
        let poly = vec![(0, 0), (6, 2), (4, 6), (0, 6)];
        let nodes = gradient_nodes(&poly, 0);
        let tr = nodes.iter().find(|n| n.position == (6, 2)).unwrap();
        assert_eq!(tr.type_label(), "cx_ypos_yneg");
    }

    #[test]
    fn zero_runs_do_not_break_signs() {
        let poly = vec![(0, 0), (2, 0), (2, 2), (4, 2), (4, 4), (0, 4)];
        let nodes = gradient_nodes(&poly, 0);
        assert!(nodes.iter().all(|n| n.position != (2, 2)));
        let step = nodes.iter().find(|n| n.position == (4, 2)).unwrap();
        assert_eq!((step.x_change, step.y_change), (None, Some((Sign::Pos, Sign::Neg))));
    }

    #[test]
    fn square_spn_ordering() {
        let b = square();
        let polys: Vec<_> = extract_contours(&b).iter().map(|c| approximate_polygon(c, 0.01).unwrap()).collect();
        let p: StatePolynetwork<f64> = build_spn(&polys, &b);
        assert_eq!(p.node_count(), 4);
        for (k, net) in &p.networks {
            for (a, c) in net.edges.keys() {
                let (pa, pc) = (p.nodes[a].pos.unwrap(), p.nodes[c].pos.unwrap());
                if k.ends_with("_h") {
                    assert!(pa[0] < pc[0]);
                } else {
                    assert!(pa[1] < pc[1]);
                }
            }
        }
        // opposite corners of a filled square see each other through foreground
        assert!(!p.network("inner_h").unwrap().edges.is_empty());
        assert_eq!(p.network("all_h").unwrap().edges.len(), 4);
    }
}
