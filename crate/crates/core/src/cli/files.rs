//! Text formats for break points, parameterizations and paths.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::param::{Domain, Parameterization};
use crate::planner::{PathPoint, Pattern, Stage, ToolPath};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn number<T: std::str::FromStr>(field: Option<&str>, path: &Path, line: usize, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::parse(path, line, format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad {what}")))
}

/// Cloud indices of the break points, whitespace separated, in traversal
/// order. `#` starts a comment.
pub fn parse_breaks(text: &str, path: &Path) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        for f in l.split_whitespace() {
            out.push(number(Some(f), path, line, "break index")?);
        }
    }
    Ok(out)
}

/// `domain rect <a> <b>` or `domain disk <r0>`, then one `i q0 q1 fixed`
/// line per point. Floats use the shortest exact representation, so reading
/// the file back reproduces the parameterization.
pub fn format_param(p: &Parameterization) -> String {
    let mut s = match p.domain() {
        Domain::Rect { a, b } => format!("domain rect {a} {b}\n"),
        Domain::Disk { r0 } => format!("domain disk {r0}\n"),
    };
    for (i, q) in p.natives().iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", q[0], q[1], u8::from(p.is_fixed(i)));
    }
    s
}

pub fn parse_param(text: &str, path: &Path) -> Result<Parameterization> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty parameterization file"))?;
    let mut f = header.split_whitespace();
    if f.next() != Some("domain") {
        return Err(Error::parse(path, line, "expected a 'domain' header"));
    }
    let domain = match f.next() {
        Some("rect") => Domain::Rect {
            a: number(f.next(), path, line, "width")?,
            b: number(f.next(), path, line, "height")?,
        },
        Some("disk") => Domain::Disk {
            r0: number(f.next(), path, line, "radius")?,
        },
        _ => return Err(Error::parse(path, line, "domain must be rect or disk")),
    };
    let (mut native, mut fixed) = (Vec::new(), Vec::new());
    for (line, l) in lines {
        let mut f = l.split_whitespace();
        let i: usize = number(f.next(), path, line, "point index")?;
        if i != native.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected point {}, found {i}", native.len()),
            ));
        }
        let q = [
            number(f.next(), path, line, "coordinate")?,
            number(f.next(), path, line, "coordinate")?,
        ];
        let flag: u8 = number(f.next(), path, line, "fixed flag")?;
        if flag > 1 {
            return Err(Error::parse(path, line, "fixed flag must be 0 or 1"));
        }
        native.push(q);
        fixed.push(flag == 1);
    }
    if native.is_empty() {
        return Err(Error::parse(path, 0, "parameterization has no points"));
    }
    Ok(Parameterization::from_native(domain, native, fixed))
}

/// `PATH <index> <pattern>` then `x y z u v` per point, 6 decimals.
pub fn format_paths(paths: &[ToolPath]) -> String {
    let mut s = String::new();
    for p in paths {
        let _ = writeln!(s, "PATH {} {}", p.index, p.pattern);
        for pt in &p.points {
            let x = pt.position;
            let _ = writeln!(s, "{:.6} {:.6} {:.6} {:.6} {:.6}", x.x, x.y, x.z, pt.q[0], pt.q[1]);
        }
    }
    s
}

/// Reads paths back. Stage and parent links are not part of the format: every
/// path comes back as an unlinked fill path.
pub fn parse_paths(text: &str, path: &Path) -> Result<Vec<ToolPath>> {
    let mut out: Vec<ToolPath> = Vec::new();
    for (line, l) in content_lines(text) {
        let mut f = l.split_whitespace();
        if l.starts_with("PATH") {
            f.next();
            let index: usize = number(f.next(), path, line, "path index")?;
            if index != out.len() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected path {}, found {index}", out.len()),
                ));
            }
            let pattern: Pattern = f
                .next()
                .ok_or_else(|| Error::parse(path, line, "missing pattern"))?
                .parse()
                .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            out.push(ToolPath {
                index,
                pattern,
                points: Vec::new(),
                stage: Stage::Fill,
                parent: None,
                step: 0.0,
                side_steps: Vec::new(),
                side_intervals: Vec::new(),
            });
            continue;
        }
        let current = out
            .last_mut()
            .ok_or_else(|| Error::parse(path, line, "point before the first PATH header"))?;
        let mut v = [0.0; 5];
        for slot in v.iter_mut() {
            *slot = number(f.next(), path, line, "coordinate")?;
        }
        current.points.push(PathPoint {
            position: Point3::new(v[0], v[1], v[2]),
            q: [v[3], v[4]],
        });
    }
    if let Some(p) = out.iter().find(|p| p.points.is_empty()) {
        return Err(Error::parse(path, 0, format!("path {} has no points", p.index)));
    }
    Ok(out)
}

/// `<index> <band|fill> <parent|-> <step>` per path.
pub fn format_stages(paths: &[ToolPath]) -> String {
    let mut s = String::new();
    for p in paths {
        let stage = match p.stage {
            Stage::Band => "band",
            Stage::Fill => "fill",
        };
        let parent = p.parent.map_or("-".to_string(), |x| x.to_string());
        let _ = writeln!(s, "{} {stage} {parent} {:.6}", p.index, p.step);
    }
    s
}

/// Restores stage and parent links written by [`format_stages`].
pub fn apply_stages(text: &str, path: &Path, paths: &mut [ToolPath]) -> Result<()> {
    let mut seen = 0;
    for (line, l) in content_lines(text) {
        let mut f = l.split_whitespace();
        let index: usize = number(f.next(), path, line, "path index")?;
        let target = paths
            .get_mut(index)
            .ok_or_else(|| Error::parse(path, line, format!("path {index} does not exist")))?;
        target.stage = match f.next() {
            Some("band") => Stage::Band,
            Some("fill") => Stage::Fill,
            _ => return Err(Error::parse(path, line, "stage must be band or fill")),
        };
        target.parent = match f.next() {
            Some("-") => None,
            other => Some(number(other, path, line, "parent index")?),
        };
        target.step = number(f.next(), path, line, "step")?;
        seen += 1;
    }
    if seen != paths.len() {
        return Err(Error::parse(
            path,
            0,
            format!("{seen} stage lines for {} paths", paths.len()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breaks_with_comments() {
        let p = Path::new("b.txt");
        assert_eq!(
            parse_breaks("# corners\n0 5\n7 # last\n\n9\n", p).unwrap(),
            vec![0, 5, 7, 9]
        );
        assert!(matches!(parse_breaks("0 x\n", p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn param_round_trip_is_exact() {
        let q = vec![[0.1 + 0.2, 1.0 / 3.0], [2.0, 1e-17], [std::f64::consts::PI, 0.0]];
        let p = Parameterization::from_native(Domain::Disk { r0: 3.25 }, q.clone(), vec![false, true, true]);
        let back = parse_param(&format_param(&p), Path::new("p.txt")).unwrap();
        assert_eq!(back.natives(), &q[..]);
        assert_eq!(back.domain(), p.domain());
        assert!(back.is_fixed(1) && !back.is_fixed(0));
    }

    #[test]
    fn param_rejects_gaps_and_bad_headers() {
        let p = Path::new("p.txt");
        assert!(parse_param("domain rect 1 1\n0 0 0 1\n2 0 0 0\n", p).is_err());
        assert!(parse_param("domain cone 1\n", p).is_err());
        assert!(parse_param("0 0 0 1\n", p).is_err());
    }

    #[test]
    fn paths_and_stages_round_trip() {
        let mk = |index, parent, stage| ToolPath {
            index,
            pattern: Pattern::ContourParallel,
            points: vec![PathPoint {
                position: Point3::new(1.0, 2.0, 3.0),
                q: [0.5, index as f64],
            }],
            stage,
            parent,
            step: 0.25,
            side_steps: vec![],
            side_intervals: vec![],
        };
        let paths = vec![mk(0, None, Stage::Fill), mk(1, Some(0), Stage::Band)];
        let text = format_paths(&paths);
        assert!(text.starts_with("PATH 0 contour\n1.000000 2.000000 3.000000 0.500000 0.000000\n"));
        let mut back = parse_paths(&text, Path::new("paths.txt")).unwrap();
        apply_stages(&format_stages(&paths), Path::new("stages.txt"), &mut back).unwrap();
        assert_eq!(back, paths);
    }
}
