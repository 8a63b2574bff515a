use std::fmt::Write;

use confocal_core::{Error, QuadratureSpec};

use crate::config::{Source, SourceConfig};

fn coord_names(dim: usize) -> Vec<String> {
    if dim <= 4 {
        ["x", "y", "z", "w"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

pub fn header(dim: usize) -> String {
    let names = coord_names(dim);
    let mut cols = names.clone();
    cols.extend(["region".into(), "V".into()]);
    cols.extend(names.iter().map(|n| format!("F{n}")));
    cols.extend(["V_err".into(), "reason".into()]);
    cols.join(",")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Short name of a refusal, e.g. `TooCloseToSurface`.
fn reason(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split([' ', '(', '{']).next().unwrap_or_default().to_string()
}

/// CSV text (header and one row per point, LF line endings).
pub fn render(src_cfg: &SourceConfig, src: &Source, quad: &QuadratureSpec, points: &[Vec<f64>]) -> String {
    let dim = src_cfg.point_dim();
    let mut out = header(dim);
    out.push('\n');
    for p in points {
        let coords: Vec<String> = p.iter().map(|x| num(*x)).collect();
        let region = src_cfg.region(p);
        let row = if p.len() != dim {
            format!("{},{region},,{},,GeometryMismatch", coords.join(","), ",".repeat(dim - 1))
        } else {
            match src.field(p, quad, src_cfg.n_layers) {
                Ok(f) => {
                    let force: Vec<String> = f.force.value.iter().map(|x| num(*x)).collect();
                    format!(
                        "{},{region},{},{},{},",
                        coords.join(","),
                        num(f.potential.value),
                        force.join(","),
                        num(f.potential.error_estimate)
                    )
                }
                Err(e) => format!("{},{region},,{},,{}", coords.join(","), ",".repeat(dim - 1), reason(&e)),
            }
        };
        writeln!(out, "{row}").expect("writing to a string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        assert_eq!(header(3), "x,y,z,region,V,Fx,Fy,Fz,V_err,reason");
        assert_eq!(header(4), "x,y,z,w,region,V,Fx,Fy,Fz,Fw,V_err,reason");
        assert_eq!(header(5).split(',').count(), 5 + 2 + 5 + 2);
    }

    #[test]
    fn reasons_are_variant_names() {
        assert_eq!(reason(&Error::TooCloseToSurface { distance: 0.0, min_sep: 1e-3 }), "TooCloseToSurface");
        assert_eq!(reason(&Error::InteriorPoint), "InteriorPoint");
        assert_eq!(reason(&Error::NotOnSphere(0.1)), "NotOnSphere");
    }

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
