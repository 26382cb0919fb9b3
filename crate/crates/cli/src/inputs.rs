//! Parsing of `--f`, `--psi` and `--target` specifications, including
//! tabulated inputs.

use std::path::Path;
use std::sync::Arc;

use sinlaw::{builtin_f, CharFn, DecayClass, Monotonicity, ParamFunction, TabulatedMonotone};

use crate::io::{read_csv, read_csv_comments};
use crate::CliError;

/// `gaussian`, `cauchy`, `const:<c>` or `table:<path>`.
pub fn parse_f(spec: &str) -> Result<ParamFunction<f64>, CliError> {
    match spec.strip_prefix("table:") {
        Some(path) => table_f(Path::new(path)),
        None => Ok(builtin_f(spec)?),
    }
}

/// `gaussian`, `cauchy` or `table:<path>`.
pub fn parse_psi(spec: &str) -> Result<CharFn<f64>, CliError> {
    match spec {
        "gaussian" => Ok(CharFn::gaussian()),
        "cauchy" => Ok(CharFn::cauchy()),
        other => match other.strip_prefix("table:") {
            Some(path) => table_psi(Path::new(path)),
            None => Err(CliError::usage(format!("unknown characteristic function '{other}'"))),
        },
    }
}

/// Limit distribution matching a built-in target `psi`.
pub fn default_target(psi: &str) -> Option<&'static str> {
    match psi {
        "gaussian" => Some("std_normal"),
        "cauchy" => Some("cauchy"),
        _ => None,
    }
}

/// `exponential:<rate>`, `gaussian:<scale>` or `algebraic:<power>`.
pub fn parse_decay(spec: &str) -> Result<DecayClass<f64>, CliError> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("bad decay class '{spec}'")))?;
    let v: f64 = value
        .trim()
        .parse()
        .ok()
        .filter(|v: &f64| *v > 0.0 && v.is_finite())
        .ok_or_else(|| CliError::usage(format!("bad decay parameter in '{spec}'")))?;
    match kind.trim() {
        "exponential" => Ok(DecayClass::Exponential { rate: v }),
        "gaussian" => Ok(DecayClass::Gaussian { scale: v }),
        "algebraic" => Ok(DecayClass::Algebraic { power: v }),
        other => Err(CliError::usage(format!("unknown decay class '{other}'"))),
    }
}

fn two_columns(path: &Path, first: &str, second: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (header, mut rows) = read_csv(path)?;
    if header.len() != 2 || header[0] != first || header[1] != second {
        return Err(CliError::usage(format!(
            "{}: expected columns '{first},{second}', found '{}'",
            path.display(),
            header.join(",")
        )));
    }
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

fn decay_comment(path: &Path) -> Result<Option<DecayClass<f64>>, CliError> {
    read_csv_comments(path)?
        .into_iter()
        .find(|(k, _)| k == "decay")
        .map(|(_, v)| parse_decay(&v))
        .transpose()
}

/// A decreasing sampler function read from `u,f_of_u` rows.
///
/// Between nodes: monotone cubic interpolation. Below the first node: the
/// power law through the first two nodes. Above the last node: linear decay
/// to `f(1) = 0`.
pub fn table_f(path: &Path) -> Result<ParamFunction<f64>, CliError> {
    let (u, f) = two_columns(path, "u", "f_of_u")?;
    if u.len() < 2 || u[0] <= 0.0 || *u.last().unwrap() >= 1.0 {
        return Err(CliError::usage(format!(
            "{}: need at least two nodes inside (0, 1)",
            path.display()
        )));
    }
    let table = TabulatedMonotone::new(u.clone(), f.clone(), None)
        .map_err(|e| CliError::usage(format!("{}: f must be strictly decreasing in u: {e}", path.display())))?;
    let table = Arc::new(table);
    let (u0, f0) = (u[0], f[0]);
    let (ul, fl) = (u[u.len() - 1], f[f.len() - 1]);
    if fl <= 0.0 {
        return Err(CliError::usage(format!("{}: f must stay positive", path.display())));
    }
    let s = ((f[1] / f0).ln() / (u[1] / u0).ln()).min(-f64::EPSILON);

    let t = Arc::clone(&table);
    let eval = move |x: f64| {
        if x < u0 {
            f0 * (x / u0).powf(s)
        } else if x > ul {
            fl * (1.0 - x) / (1.0 - ul)
        } else {
            t.eval(x).unwrap_or(f64::NAN)
        }
    };
    let inverse = move |w: f64| {
        if w > f0 {
            u0 * (w / f0).powf(1.0 / s)
        } else if w < fl {
            1.0 - w * (1.0 - ul) / fl
        } else {
            table.invert(w).unwrap_or(f64::NAN)
        }
    };
    let mut out = ParamFunction::new(format!("table:{}", path.display()), eval)
        .monotone(Monotonicity::Decreasing)
        .with_inverse(inverse)
        .with_range(0.0, f64::INFINITY);
    if let Some(decay) = decay_comment(path)? {
        out = out.with_char_decay(decay);
    }
    Ok(out)
}

/// A target characteristic function read from `t,psi` rows, `psi`
/// decreasing on `t >= 0`, extended evenly and by zero beyond the last
/// node. The file must declare its decay with a `# decay: <class>` line.
pub fn table_psi(path: &Path) -> Result<CharFn<f64>, CliError> {
    let decay = decay_comment(path)?.ok_or_else(|| {
        CliError::usage(format!(
            "{}: missing '# decay: <exponential|gaussian|algebraic>:<value>' line",
            path.display()
        ))
    })?;
    let (t, psi) = two_columns(path, "t", "psi")?;
    if t.first() != Some(&0.0) {
        return Err(CliError::usage(format!("{}: the first node must be t = 0", path.display())));
    }
    let table = TabulatedMonotone::new(t, psi, None)
        .map_err(|e| CliError::usage(format!("{}: psi must be strictly decreasing in t: {e}", path.display())))?;
    let end = table.domain().1;
    Ok(CharFn::new(
        format!("table:{}", path.display()),
        move |x: f64| {
            let x = x.abs();
            if x > end {
                0.0
            } else {
                table.eval(x).unwrap_or(f64::NAN)
            }
        },
        decay,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{csv, write_atomic};

    #[test]
    fn builtin_specs() {
        assert_eq!(parse_f("gaussian").unwrap().id(), "gaussian");
        assert_eq!(parse_f("nope").unwrap_err().status(), crate::Status::Usage);
        assert_eq!(parse_psi("cauchy").unwrap().id(), "cauchy");
        assert!(matches!(parse_psi("laplace"), Err(CliError::Usage(_))));
        assert_eq!(default_target("gaussian"), Some("std_normal"));
    }

    #[test]
    fn decay_specs() {
        assert_eq!(parse_decay("gaussian:2").unwrap(), DecayClass::Gaussian { scale: 2.0 });
        assert!(parse_decay("gaussian:-2").is_err());
        assert!(parse_decay("weibull:1").is_err());
    }

    #[test]
    fn tabulated_f_follows_the_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let exact = |u: f64| (-2.0 * u.ln()).sqrt();
        let rows = (1..400).map(|i| {
            let u = i as f64 / 400.0;
            vec![u, exact(u)]
        });
        write_atomic(&p, csv(&["u", "f_of_u"], rows).as_bytes()).unwrap();
        let f = table_f(&p).unwrap();
        for u in [0.01, 0.3, 0.77] {
            assert!((f.eval(u) - exact(u)).abs() < 1e-5);
            assert!((f.inverse(f.eval(u)).unwrap() - u).abs() < 1e-9);
        }
        // extrapolated ends stay monotone and invertible
        for u in [1e-6, 0.999] {
            assert!(f.eval(u).is_finite());
            assert!((f.inverse(f.eval(u)).unwrap() - u).abs() < 1e-12);
        }
        assert!(f.eval(1e-6) > f.eval(1.0 / 400.0));
    }

    #[test]
    fn tabulated_psi_requires_decay() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("psi.csv");
        let rows = (0..200).map(|i| {
            let t = i as f64 * 0.05;
            vec![t, (-0.5 * t * t).exp()]
        });
        let body = csv(&["t", "psi"], rows);
        write_atomic(&p, body.as_bytes()).unwrap();
        assert!(matches!(table_psi(&p), Err(CliError::Usage(_))));
        write_atomic(&p, format!("# decay: gaussian:1\n{body}").as_bytes()).unwrap();
        let psi = table_psi(&p).unwrap();
        assert!((psi.eval(-1.3) - (-0.5f64 * 1.69).exp()).abs() < 1e-6);
        assert_eq!(psi.eval(50.0), 0.0);
    }
}
