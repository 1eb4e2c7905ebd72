use std::collections::VecDeque;

use proptest::prelude::*;
use varsel::spn::StatePolynetwork;
use varsel::vision::{extract_contours, image_to_spn, BinaryImage, GrayImage, Orientation, VisionConfig, SN_KEYS};

fn gray(w: usize, h: usize, bits: &[bool]) -> GrayImage {
    GrayImage::new(w, h, bits.iter().map(|b| if *b { 255 } else { 0 }).collect()).unwrap()
}

/// Flood-fill component counts: 8-connected foreground, and 4-connected
/// background regions that do not reach the image border.
fn components(bin: &BinaryImage) -> (usize, usize) {
    let (w, h) = (bin.width as i64, bin.height as i64);
    let mut seen = vec![false; (w * h) as usize];
    let (mut fg, mut holes) = (0, 0);
    for start in 0..w * h {
        if seen[start as usize] {
            continue;
        }
        let on = bin.get(start % w, start / w);
        let steps: &[(i64, i64)] = if on {
            &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
        } else {
            &[(1, 0), (-1, 0), (0, 1), (0, -1)]
        };
        let mut border = false;
        let mut q = VecDeque::from([start]);
        seen[start as usize] = true;
        while let Some(i) = q.pop_front() {
            let (x, y) = (i % w, i / w);
            border |= x == 0 || y == 0 || x == w - 1 || y == h - 1;
            for (dx, dy) in steps {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = ny * w + nx;
                if !seen[j as usize] && bin.get(nx, ny) == on {
                    seen[j as usize] = true;
                    q.push_back(j);
                }
            }
        }
        if on {
            fg += 1;
        } else if !border {
            holes += 1;
        }
    }
    (fg, holes)
}

fn image() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (2usize..14, 2usize..14).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(any::<bool>(), w * h)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn contour_counts_match_flood_fill((w, h, bits) in image()) {
        let bin = BinaryImage { width: w, height: h, bits };
        let cs = extract_contours(&bin);
        let (fg, holes) = components(&bin);
        prop_assert_eq!(cs.iter().filter(|c| !c.hole).count(), fg);
        prop_assert_eq!(cs.iter().filter(|c| c.hole).count(), holes);
        for c in &cs {
            prop_assert!(c.points.iter().all(|(x, y)| bin.get(*x, *y)));
            for pair in c.points.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                prop_assert!((a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1 && a != b);
            }
        }
    }

    #[test]
    fn pipeline_is_deterministic((w, h, bits) in image()) {
        let img = gray(w, h, &bits);
        let cfg = VisionConfig::default();
        let (a, _): (StatePolynetwork<f64>, _) = image_to_spn(&img, &cfg).unwrap();
        let (b, _): (StatePolynetwork<f64>, _) = image_to_spn(&img, &cfg).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn directional_edges_follow_coordinates((w, h, bits) in image()) {
        let img = gray(w, h, &bits);
        let (p, _): (StatePolynetwork<f64>, _) = image_to_spn(&img, &VisionConfig::default()).unwrap();
        let bin = varsel::vision::binarize(&img, 0.5).unwrap();
        for node in p.nodes.values() {
            let [x, y] = node.pos.unwrap();
            prop_assert!(bin.get(x as i64, y as i64));
        }
        for key in SN_KEYS {
            let axis = usize::from(key.ends_with("_v"));
            for (a, b) in p.network(key).unwrap().edges.keys() {
                prop_assert!(p.nodes[a].pos.unwrap()[axis] < p.nodes[b].pos.unwrap()[axis]);
            }
        }
        for kind in ["contour", "inner", "outer"] {
            for dir in ["h", "v"] {
                let all = p.network(&format!("all_{dir}")).unwrap();
                for e in p.network(&format!("{kind}_{dir}")).unwrap().edges.keys() {
                    prop_assert!(all.has_edge(e.0, e.1));
                }
            }
        }
    }
}

#[test]
fn figure_eight_has_one_border_and_two_holes() {
    let bin = BinaryImage::from_rows(&[
        ".......",
        "..###..",
        ".#...#.",
        ".#...#.",
        "..###..",
        ".#...#.",
        ".#...#.",
        "..###..",
        ".......",
    ]);
    let cs = extract_contours(&bin);
    assert_eq!(components(&bin), (1, 2));
    assert_eq!(cs.iter().filter(|c| !c.hole).count(), 1);
    assert_eq!(cs.iter().filter(|c| c.hole).count(), 2);
    for c in &cs {
        let want = if c.hole { Orientation::Ccw } else { Orientation::Cw };
        assert_eq!(c.orientation, want);
    }
}

#[test]
fn blank_image_has_no_nodes() {
    let (p, _): (StatePolynetwork<f64>, _) = image_to_spn(&gray(5, 5, &[false; 25]), &VisionConfig::default()).unwrap();
    assert_eq!(p.node_count(), 0);
}
