//! Minimal SVG rendering of a sweep profile: the fitted decay slope
//! against the lateral position, detected maxima marked, true tip
//! positions overlaid for comparison. No plotting dependency; output is a
//! deterministic standalone SVG string.

use crate::io::ProfileTable;

const W: f64 = 860.0;
const H: f64 = 460.0;
const ML: f64 = 66.0;
const MR: f64 = 22.0;
const MT: f64 = 40.0;
const MB: f64 = 52.0;

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let step = nice_step(hi - lo, target);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders the profile with detected maxima and optional true tips.
pub fn profile_svg(table: &ProfileTable, true_tips: &[f64], title: &str) -> String {
    let finite: Vec<(f64, f64)> = table
        .xi1
        .iter()
        .zip(&table.phi)
        .filter(|(_, p)| p.is_finite())
        .map(|(&x, &p)| (x, p))
        .collect();
    let (x_lo, x_hi) = match (finite.first(), finite.last()) {
        (Some(f), Some(l)) if l.0 > f.0 => (f.0, l.0),
        _ => (0.0, 1.0),
    };
    let (mut y_lo, mut y_hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !(y_lo.is_finite() && y_hi.is_finite()) {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.08 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let sx = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut s = String::with_capacity(16 * 1024);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<text x=\"{:.1}\" y=\"24\" \
         text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        W / 2.0
    ));

    for t in ticks(x_lo, x_hi, 8) {
        let x = sx(t);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{MT}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            H - MB,
            H - MB + 18.0,
            fmt(t)
        ));
    }
    for t in ticks(y_lo, y_hi, 6) {
        let y = sy(t);
        s.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            W - MR,
            ML - 8.0,
            y + 4.0,
            fmt(t)
        ));
    }
    s.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));

    for &tip in true_tips {
        if tip < x_lo || tip > x_hi {
            continue;
        }
        let x = sx(tip);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{MT}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#888\" \
             stroke-dasharray=\"5 4\"/>\n",
            H - MB
        ));
    }

    let pts: Vec<String> = finite.iter().map(|(x, p)| format!("{:.1},{:.1}", sx(*x), sy(*p))).collect();
    if !pts.is_empty() {
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.6\"/>\n",
            pts.join(" ")
        ));
    }

    for (i, &is_max) in table.is_max.iter().enumerate() {
        if !is_max || !table.phi[i].is_finite() {
            continue;
        }
        let (x, y) = (sx(table.xi1[i]), sy(table.phi[i]));
        s.push_str(&format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4.5\" fill=\"#c23b22\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#c23b22\">{}</text>\n",
            y - 10.0,
            fmt(table.xi1[i])
        ));
    }

    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">lateral position</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">decay slope</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ProfileTable {
        let xi1: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
        let phi: Vec<f64> = xi1.iter().map(|x| 1.0 + (-x * x / 2.0).exp()).collect();
        let is_max: Vec<bool> = xi1.iter().map(|&x| x.abs() < 0.05).collect();
        let r2 = vec![0.99; xi1.len()];
        ProfileTable { xi1, phi, r2, is_max }
    }

    #[test]
    fn renders_well_formed_svg_with_markers() {
        let t = table();
        let svg = profile_svg(&t, &[-1.0, 1.0], "profile");
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("NaN"));
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), t.xi1.len());
    }

    #[test]
    fn degenerate_and_nonfinite_inputs_stay_finite() {
        let flat = ProfileTable {
            xi1: vec![0.0, 1.0, 2.0],
            phi: vec![1.0, 1.0, 1.0],
            r2: vec![1.0; 3],
            is_max: vec![false; 3],
        };
        let svg = profile_svg(&flat, &[], "flat");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        let holes = ProfileTable {
            xi1: vec![0.0, 1.0, 2.0, 3.0],
            phi: vec![1.0, f64::NAN, 2.0, f64::INFINITY],
            r2: vec![1.0; 4],
            is_max: vec![false, true, false, false],
        };
        let svg = profile_svg(&holes, &[1.5], "holes");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        assert_eq!(svg.matches("<circle").count(), 0);
    }

    #[test]
    fn output_is_deterministic() {
        let t = table();
        assert_eq!(profile_svg(&t, &[0.5], "p"), profile_svg(&t, &[0.5], "p"));
    }
}
