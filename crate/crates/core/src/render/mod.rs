//! Molecule drawings with per-atom scores as SVG.
//!
//! ```
//! use graphsal::molgraph::parse_smiles;
//! use graphsal::render::{render_svg, ColorScale, RenderSpec};
//!
//! let mol = parse_smiles("c1ccncc1O")?;
//! let scores = [0.1, -0.2, 0.0, 0.9, 0.3, -0.5, 1.0];
//! let svg = render_svg(&mol, &scores, &RenderSpec::new(ColorScale::Diverging));
//! assert!(svg.starts_with("<svg"));
//! # Ok::<(), graphsal::molgraph::SmilesError>(())
//! ```

mod layout;

pub use layout::{layout, small_rings, Layout};

use std::fmt::Write as _;

use crate::molgraph::{BondOrder, MolecularGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorScale {
    /// White to red, for non-negative scores.
    Sequential,
    /// Blue through white to red; zero is exactly white.
    Diverging,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub scale: ColorScale,
    /// Atom circle radius in pixels.
    pub atom_radius: f64,
    pub width: f64,
    pub height: f64,
    /// Seed of the layout's starting positions.
    pub layout_seed: u64,
    pub title: Option<String>,
}

impl RenderSpec {
    pub fn new(scale: ColorScale) -> Self {
        Self {
            scale,
            atom_radius: 13.0,
            width: 480.0,
            height: 360.0,
            layout_seed: 0,
            title: None,
        }
    }
}

pub const NEUTRAL: [u8; 3] = [255, 255, 255];
pub const POSITIVE: [u8; 3] = [214, 39, 40];
pub const NEGATIVE: [u8; 3] = [31, 90, 200];

/// Colour of `value` after dividing by `max_abs` (the molecule's largest
/// absolute score). Sequential scales clamp negatives to white.
pub fn score_color(value: f64, max_abs: f64, scale: ColorScale) -> [u8; 3] {
    let t = if max_abs > 0.0 { (value / max_abs).clamp(-1.0, 1.0) } else { 0.0 };
    let (end, t) = match scale {
        ColorScale::Sequential => (POSITIVE, t.max(0.0)),
        ColorScale::Diverging if t >= 0.0 => (POSITIVE, t),
        ColorScale::Diverging => (NEGATIVE, -t),
    };
    let mut out = [0u8; 3];
    for k in 0..3 {
        let v = NEUTRAL[k] as f64 + (end[k] as f64 - NEUTRAL[k] as f64) * t;
        out[k] = v.round() as u8;
    }
    out
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Draws `graph` with atom `i` filled according to `scores[i]`.
///
/// Output depends only on the inputs, so equal inputs give equal bytes.
///
/// # Panics
/// If `scores` and the atom count differ.
pub fn render_svg(graph: &MolecularGraph, scores: &[f64], spec: &RenderSpec) -> String {
    assert_eq!(scores.len(), graph.atom_count(), "one score per atom");
    let layout = layout(graph, spec.layout_seed);
    let (lo, hi) = layout.bounds();
    let margin = spec.atom_radius * 2.0;
    let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
    let scale = ((spec.width - 2.0 * margin) / span[0])
        .min((spec.height - 2.0 * margin) / span[1])
        .min(spec.atom_radius * 3.5);
    let offset = [
        (spec.width - scale * span[0]) / 2.0 - scale * lo[0],
        (spec.height - scale * span[1]) / 2.0 - scale * lo[1],
    ];
    let pos: Vec<[f64; 2]> = layout
        .coords
        .iter()
        .map(|p| [offset[0] + scale * p[0], offset[1] + scale * p[1]])
        .collect();
    let max_abs = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));

    let mut svg = String::new();
    let (w, h) = (spec.width, spec.height);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(title) = &spec.title {
        let _ = writeln!(svg, r##"<text x="8" y="18" font-size="13" fill="#333">{}</text>"##, escape(title));
    }

    let _ = writeln!(svg, r##"<g stroke="#444" stroke-width="2" stroke-linecap="round">"##);
    for bond in graph.bonds() {
        let (a, b) = (pos[bond.i], pos[bond.j]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-9);
        let normal = [-d[1] / len, d[0] / len];
        let line = |svg: &mut String, off: f64, dashed: bool| {
            let (ox, oy) = (normal[0] * off, normal[1] * off);
            let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"{dash}/>"#,
                a[0] + ox,
                a[1] + oy,
                b[0] + ox,
                b[1] + oy
            );
        };
        match bond.order {
            BondOrder::Single => line(&mut svg, 0.0, false),
            BondOrder::Double => {
                line(&mut svg, -2.5, false);
                line(&mut svg, 2.5, false);
            }
            BondOrder::Triple => {
                line(&mut svg, -4.0, false);
                line(&mut svg, 0.0, false);
                line(&mut svg, 4.0, false);
            }
            BondOrder::Aromatic => {
                line(&mut svg, -2.0, false);
                line(&mut svg, 2.5, true);
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    for (i, p) in pos.iter().enumerate() {
        let atom = graph.atom(i);
        let fill = hex(score_color(scores[i], max_abs, spec.scale));
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="{:.1}" fill="{fill}" stroke="#555" stroke-width="1"><title>{} {i}: {:.4}</title></circle>"##,
            p[0], p[1], spec.atom_radius, atom.element, scores[i]
        );
        let mut label = atom.element.symbol().to_string();
        if atom.aromatic {
            label = label.to_ascii_lowercase();
        }
        match atom.charge {
            0 => {}
            1 => label.push('+'),
            -1 => label.push('-'),
            c => {
                let _ = write!(label, "{}{}", c.abs(), if c > 0 { '+' } else { '-' });
            }
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" dominant-baseline="central" fill="#111">{}</text>"##,
            p[0],
            p[1],
            escape(&label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    #[test]
    fn zero_maps_to_exact_white() {
        assert_eq!(score_color(0.0, 3.0, ColorScale::Diverging), NEUTRAL);
        assert_eq!(score_color(0.0, 0.0, ColorScale::Diverging), NEUTRAL);
        assert_eq!(score_color(3.0, 3.0, ColorScale::Diverging), POSITIVE);
        assert_eq!(score_color(-3.0, 3.0, ColorScale::Diverging), NEGATIVE);
        assert_eq!(score_color(-1.0, 1.0, ColorScale::Sequential), NEUTRAL);
    }

    #[test]
    fn diverging_is_symmetric_in_intensity() {
        let p = score_color(0.5, 1.0, ColorScale::Diverging);
        let n = score_color(-0.5, 1.0, ColorScale::Diverging);
        assert!(p[0] == 255 || p[0] > p[2]);
        assert!(n[2] > n[0]);
    }

    #[test]
    fn svg_is_deterministic_and_complete() {
        let g = parse_smiles("C[N+](=O)[O-]").unwrap();
        let s = [0.5, 1.0, -0.2, 0.0];
        let a = render_svg(&g, &s, &RenderSpec::new(ColorScale::Diverging));
        assert_eq!(a, render_svg(&g, &s, &RenderSpec::new(ColorScale::Diverging)));
        assert_eq!(a.matches("<circle").count(), 4);
        assert!(a.contains(">N+<") && a.contains(">O-<"));
        assert!(a.contains("#ffffff"));
    }
}
