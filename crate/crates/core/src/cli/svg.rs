//! Parameter-plane drawings.

use std::fmt::Write as _;

use crate::param::{Domain, Parameterization};
use crate::planner::ToolPath;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// Maps Cartesian parameter coordinates to pixels, `y` pointing up.
struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn new(domain: Domain) -> Self {
        let (x0, y0, x1, y1) = match domain {
            Domain::Rect { a, b } => (0.0, 0.0, a, b),
            Domain::Disk { r0 } => (-r0, -r0, r0, r0),
        };
        let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
        Self {
            x0,
            y1,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn px(&self, c: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (c[0] - self.x0) * self.scale,
            MARGIN + (self.y1 - c[1]) * self.scale,
        )
    }
}

fn open(s: &mut String) {
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

fn outline(s: &mut String, v: &View, domain: Domain) {
    match domain {
        Domain::Rect { a, b } => {
            let (x0, y0) = v.px([0.0, b]);
            let _ = writeln!(
                s,
                "<rect x=\"{x0:.6}\" y=\"{y0:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"none\" stroke=\"#999999\"/>",
                a * v.scale,
                b * v.scale
            );
        }
        Domain::Disk { r0 } => {
            let (cx, cy) = v.px([0.0, 0.0]);
            let _ = writeln!(
                s,
                "<circle cx=\"{cx:.6}\" cy=\"{cy:.6}\" r=\"{:.6}\" fill=\"none\" stroke=\"#999999\"/>",
                r0 * v.scale
            );
        }
    }
}

fn polyline(s: &mut String, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
    let _ = write!(s, "<polyline fill=\"none\" {style} points=\"");
    for (k, (x, y)) in pts.enumerate() {
        let _ = write!(s, "{}{x:.6},{y:.6}", if k == 0 { "" } else { " " });
    }
    let _ = writeln!(s, "\"/>");
}

/// Position of a boundary image along the domain perimeter, for ordering.
fn perimeter_position(domain: Domain, c: [f64; 2]) -> f64 {
    match domain {
        Domain::Rect { a, b } => {
            let d = [c[1], a - c[0], b - c[1], c[0]];
            let side = (0..4).min_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap_or(0);
            match side {
                0 => c[0],
                1 => a + c[1],
                2 => a + b + (a - c[0]),
                _ => 2.0 * a + b + (b - c[1]),
            }
        }
        Domain::Disk { .. } => domain.from_cartesian(c)[1],
    }
}

/// Parameter images as dots with the boundary images joined in a highlighted
/// closed polyline.
pub fn domain_svg(p: &Parameterization) -> String {
    let domain = p.domain();
    let v = View::new(domain);
    let mut s = String::new();
    open(&mut s);
    outline(&mut s, &v, domain);
    for (i, &c) in p.cartesians().iter().enumerate() {
        if !p.is_fixed(i) {
            let (x, y) = v.px(c);
            let _ = writeln!(s, "<circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"1.5\" fill=\"#1f4e8c\"/>");
        }
    }
    let mut boundary: Vec<[f64; 2]> = (0..p.len())
        .filter(|&i| p.is_fixed(i))
        .map(|i| p.cartesian(i))
        .collect();
    boundary.sort_by(|x, y| perimeter_position(domain, *x).total_cmp(&perimeter_position(domain, *y)));
    if let Some(&first) = boundary.first() {
        boundary.push(first);
        polyline(
            &mut s,
            boundary.iter().map(|&c| v.px(c)),
            "stroke=\"#d62728\" stroke-width=\"2\"",
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Every path drawn in the parameter plane; one-point paths as dots.
pub fn paths_svg(domain: Domain, paths: &[ToolPath]) -> String {
    let v = View::new(domain);
    let mut s = String::new();
    open(&mut s);
    outline(&mut s, &v, domain);
    for p in paths {
        if let [only] = p.points.as_slice() {
            let (x, y) = v.px(domain.to_cartesian(only.q));
            let _ = writeln!(s, "<circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"3\" fill=\"#2ca02c\"/>");
        } else {
            polyline(
                &mut s,
                p.points.iter().map(|pt| v.px(domain.to_cartesian(pt.q))),
                "stroke=\"#2ca02c\" stroke-width=\"1\"",
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_perimeter_runs_counterclockwise() {
        let d = Domain::Rect { a: 2.0, b: 1.0 };
        let order: Vec<f64> = [[1.0, 0.0], [2.0, 0.5], [1.0, 1.0], [0.0, 0.5]]
            .iter()
            .map(|&c| perimeter_position(d, c))
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn drawing_contains_every_interior_point() {
        let p = Parameterization::from_native(
            Domain::Rect { a: 1.0, b: 1.0 },
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0]],
            vec![true, true, false, true, true],
        );
        let svg = domain_svg(&p);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.ends_with("</svg>\n"));
    }
}
