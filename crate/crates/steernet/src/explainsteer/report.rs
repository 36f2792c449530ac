use super::spectrum::EnergySpectrum;
use super::ExplainError;
use crate::filterbank::Basis;
use std::fmt::Write as _;

/// Fixed colormap anchors (position, rgb); the 256-step table linearly
/// interpolates between them. Documented in docs/reports.md so report
/// colors stay stable for golden-file comparisons.
pub const COLORMAP_ANCHORS: [(u8, (u8, u8, u8)); 9] = [
    (0, (68, 1, 84)),
    (32, (71, 44, 122)),
    (64, (59, 81, 139)),
    (96, (44, 113, 142)),
    (128, (33, 144, 141)),
    (160, (39, 173, 129)),
    (192, (92, 200, 99)),
    (224, (170, 220, 50)),
    (255, (253, 231, 37)),
];

fn color_at(step: u8) -> (u8, u8, u8) {
    let mut lo = COLORMAP_ANCHORS[0];
    for &hi in &COLORMAP_ANCHORS[1..] {
        if step <= hi.0 {
            let span = (hi.0 - lo.0) as f32;
            let t = if span == 0.0 {
                0.0
            } else {
                (step - lo.0) as f32 / span
            };
            let mix = |a: u8, b: u8| (a as f32 + t * (b as f32 - a as f32)).round() as u8;
            return (
                mix(lo.1 .0, hi.1 .0),
                mix(lo.1 .1, hi.1 .1),
                mix(lo.1 .2, hi.1 .2),
            );
        }
        lo = hi;
    }
    lo.1
}

/// Per-layer spectra as CSV rows `layer,basis_rank,energy`, ranks in
/// frequency order.
pub fn spectra_csv(spectra: &[EnergySpectrum], basis: &Basis) -> String {
    let mut out = String::from("layer,basis_rank,energy\n");
    for s in spectra {
        for rank in 0..basis.m() {
            let row = basis.row_at_rank(rank);
            let _ = writeln!(out, "{},{},{:.6}", s.layer_id, rank, s.e_d[row]);
        }
    }
    out
}

/// e(1) rows as `layer,slot,value`; slots are h0..h{h-1} then w0..w{w-1}.
pub fn e1_csv(spectra: &[EnergySpectrum]) -> String {
    let mut out = String::from("layer,slot,value\n");
    for s in spectra {
        let (h, _w) = s.sizes;
        for (i, &v) in s.e1.iter().enumerate() {
            let slot = if i < h {
                format!("h{i}")
            } else {
                format!("w{}", i - h)
            };
            let _ = writeln!(out, "{},{},{:.6}", s.layer_id, slot, v);
        }
    }
    out
}

/// e(0) rows as `layer,frequency,value`; layers with non-square kernels are
/// skipped (they carry no e(0)).
pub fn e0_csv(spectra: &[EnergySpectrum]) -> String {
    let mut out = String::from("layer,frequency,value\n");
    for s in spectra {
        if let Some(e0) = &s.e0 {
            for (q, &v) in e0.iter().enumerate() {
                let _ = writeln!(out, "{},{},{:.6}", s.layer_id, q, v);
            }
        }
    }
    out
}

/// Heatmap of per-layer spectra: one column per layer, one row per basis
/// filter in frequency order, log-scaled colors, with row-sum and
/// column-sum bar plots. All spectra must share the basis kernel size.
pub fn heatmap_svg(spectra: &[EnergySpectrum], basis: &Basis) -> Result<String, ExplainError> {
    if spectra.is_empty() {
        return Err(ExplainError::NoSpatialLayers);
    }
    if spectra.iter().any(|s| s.sizes != basis.sizes()) {
        return Err(ExplainError::MixedKernelSizes);
    }
    let m = basis.m();
    let cols = spectra.len();
    let cell = 18usize;
    let left = 46usize;
    let top = 18usize;
    let bar_w = 70usize;
    let bar_h = 56usize;
    let label_h = 110usize;
    let width = left + cols * cell + 14 + bar_w + 10;
    let height = top + m * cell + 12 + bar_h + label_h;

    // frequency-ordered value matrix and its log normalization
    let value = |rank: usize, col: usize| spectra[col].e_d[basis.row_at_rank(rank)] as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for rank in 0..m {
        for col in 0..cols {
            let lv = (value(rank, col) + 1e-12).ln();
            lo = lo.min(lv);
            hi = hi.max(lv);
        }
    }
    let norm = |v: f64| -> u8 {
        if hi <= lo {
            128
        } else {
            (((v + 1e-12).ln() - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"monospace\" font-size=\"10\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    for rank in 0..m {
        let y = top + rank * cell;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            left - 4,
            y + cell - 5,
            rank
        );
        for col in 0..cols {
            let (r, g, b) = color_at(norm(value(rank, col)));
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>",
                left + col * cell,
                y,
                cell,
                cell
            );
        }
    }
    // row sums (right bars)
    let row_sums: Vec<f64> = (0..m)
        .map(|rank| (0..cols).map(|c| value(rank, c)).sum())
        .collect();
    let row_max = row_sums.iter().cloned().fold(1e-12, f64::max);
    for (rank, &s) in row_sums.iter().enumerate() {
        let w = (s / row_max * bar_w as f64).round() as usize;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#555577\"/>",
            left + cols * cell + 14,
            top + rank * cell + 3,
            w.max(1),
            cell - 6
        );
    }
    // column sums (bottom bars)
    let col_sums: Vec<f64> = (0..cols)
        .map(|c| (0..m).map(|rank| value(rank, c)).sum())
        .collect();
    let col_max = col_sums.iter().cloned().fold(1e-12, f64::max);
    let bars_y = top + m * cell + 12;
    for (col, &s) in col_sums.iter().enumerate() {
        let h = (s / col_max * bar_h as f64).round() as usize;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#557755\"/>",
            left + col * cell + 3,
            bars_y + (bar_h - h.max(1)),
            cell - 6,
            h.max(1)
        );
    }
    // layer labels, rotated under the columns
    let label_y = bars_y + bar_h + 8;
    for (col, s) in spectra.iter().enumerate() {
        let x = left + col * cell + cell / 2 + 3;
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{label_y}\" transform=\"rotate(90 {x} {label_y})\">{}</text>",
            s.layer_id
        );
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
