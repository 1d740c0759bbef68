use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ReportBundle;
use crate::Result;

/// `x` with 10 significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-3..10).contains(&exp) {
        format!("{:.*}", (9 - exp) as usize, x)
    } else {
        sci
    }
}

fn eigenvalues_csv(b: &ReportBundle) -> String {
    let mut s = String::from("level,h,j,k_re,k_im,residual,seconds\n");
    for r in &b.eigenvalues {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.level,
            format_sig(r.h),
            r.j,
            format_sig(r.k.re),
            format_sig(r.k.im),
            format_sig(r.residual),
            format_sig(r.seconds)
        );
    }
    s
}

fn errors_csv(b: &ReportBundle) -> String {
    let mut s = String::from("h,j,abs_error\n");
    for r in &b.errors {
        let _ = writeln!(s, "{},{},{}", format_sig(r.h), r.j, format_sig(r.abs_error));
    }
    s
}

fn orders_csv(b: &ReportBundle) -> String {
    let mut s = String::from("j,slope\n");
    for (j, slope) in &b.orders {
        let _ = writeln!(s, "{j},{}", format_sig(*slope));
    }
    s
}

fn diagnostics_csv(b: &ReportBundle) -> String {
    let mut s = String::from("level,h,min_diagonal,max_off_diagonal,violated,reduced_dim,galerkin_residual\n");
    for r in &b.diagnostics {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.level,
            format_sig(r.h),
            format_sig(r.min_diagonal),
            format_sig(r.max_off_diagonal),
            r.violated,
            r.reduced_dim,
            format_sig(r.galerkin_residual)
        );
    }
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log error curves, one polyline per eigenvalue index.
fn errors_svg(b: &ReportBundle) -> String {
    let (w, hgt, margin) = (640.0, 480.0, 70.0);
    let mut curves: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for r in b.errors.iter().filter(|r| r.abs_error > 0.0 && r.h > 0.0) {
        let p = (r.h.log10(), r.abs_error.log10());
        match curves.iter_mut().find(|c| c.0 == r.j) {
            Some(c) => c.1.push(p),
            None => curves.push((r.j, vec![p])),
        }
    }
    let all: Vec<(f64, f64)> = curves.iter().flat_map(|c| c.1.iter().copied()).collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if all.is_empty() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let sy = |y: f64| hgt - margin - (y - y0) / (y1 - y0) * (hgt - 2.0 * margin);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}" viewBox="0 0 {w} {hgt}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{hgt}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = margin,
        b = hgt - margin,
        r = w - margin
    );
    for (v, pos) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{pos:.2}" y="{:.2}" font-size="11" text-anchor="middle">{v:.3}</text>"#,
            hgt - margin + 16.0
        );
    }
    for (v, pos) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{pos:.2}" font-size="11" text-anchor="end">{v:.3}</text>"#,
            margin - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">log₁₀(h)</text>"#,
        w / 2.0,
        hgt - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.2})">log₁₀(error)</text>"#,
        hgt / 2.0,
        hgt / 2.0
    );
    for (i, (j, pts)) in curves.iter().enumerate() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline data-j="{j}" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{colour}">k{j}</text>"#,
            w - margin + 6.0,
            margin + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the CSV tables and the error plot into `dir`, creating it when
/// needed.
pub fn emit_outputs(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("eigenvalues.csv"), eigenvalues_csv(bundle))?;
    fs::write(dir.join("errors.csv"), errors_csv(bundle))?;
    fs::write(dir.join("orders.csv"), orders_csv(bundle))?;
    fs::write(dir.join("diagnostics.csv"), diagnostics_csv(bundle))?;
    fs::write(dir.join("errors_loglog.svg"), errors_svg(bundle))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::ErrorRow;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_sig(1.8795911662), "1.879591166");
        assert_eq!(format_sig(std::f64::consts::SQRT_2 / 64.0), "0.02209708691");
        assert_eq!(format_sig(-4.4965518150), "-4.496551815");
        assert_eq!(format_sig(9.99999999999), "10.00000000");
        assert_eq!(format_sig(1.234e-7), "1.234000000e-7");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn one_polyline_per_index() {
        let mut b = ReportBundle::default();
        for j in 1..=3 {
            for m in 1..=3 {
                let h = 0.5f64.powi(m);
                b.errors.push(ErrorRow {
                    h,
                    j,
                    abs_error: h.powi(4) * j as f64,
                });
            }
        }
        let svg = errors_svg(&b);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("log₁₀(h)") && svg.contains("log₁₀(error)"));
        assert_eq!(errors_svg(&ReportBundle::default()).matches("<polyline").count(), 0);
    }
}
