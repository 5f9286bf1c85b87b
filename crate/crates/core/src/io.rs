//! File formats: tensors JSON, FCIDUMP and fixed-precision number formatting.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{interleaved_order, normal_order, CoefficientTensors, TwoBodyOrdering};

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form outside
/// `1e-4 ≤ |x| < 1e12`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Serialize, Deserialize)]
struct TensorsRecord {
    n_spin_orbitals: usize,
    one_body: Vec<Vec<[f64; 2]>>,
    two_body: Vec<(usize, usize, usize, usize, f64, f64)>,
    #[serde(default)]
    constant: f64,
    #[serde(default = "interleaved")]
    ordering: TwoBodyOrdering,
}

fn interleaved() -> TwoBodyOrdering {
    TwoBodyOrdering::Interleaved
}

/// JSON with complex numbers as `[re, im]` and two-body entries as
/// `[p, q, r, s, re, im]` in key order.
pub fn tensors_to_json(tensors: &CoefficientTensors) -> Result<String> {
    let n = tensors.n_spin_orbitals();
    let record = TensorsRecord {
        n_spin_orbitals: n,
        one_body: (0..n)
            .map(|p| {
                (0..n)
                    .map(|q| {
                        let z = tensors.one_body()[(p, q)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect(),
        two_body: tensors
            .two_body()
            .iter()
            .map(|(&[p, q, r, s], z)| (p, q, r, s, z.re, z.im))
            .collect(),
        constant: tensors.constant(),
        ordering: tensors.ordering(),
    };
    Ok(serde_json::to_string_pretty(&record)?)
}

pub fn tensors_from_json(text: &str) -> Result<CoefficientTensors> {
    let record: TensorsRecord = serde_json::from_str(text)?;
    let n = record.n_spin_orbitals;
    if record.one_body.len() != n || record.one_body.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: record.one_body.len(),
        });
    }
    let one = DMatrix::from_fn(n, n, |p, q| {
        let [re, im] = record.one_body[p][q];
        Complex64::new(re, im)
    });
    let mut two = BTreeMap::new();
    for &(p, q, r, s, re, im) in &record.two_body {
        if [p, q, r, s].iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "two-body index ({p},{q},{r},{s}) out of range for {n} spin-orbitals"
            )));
        }
        *two.entry([p, q, r, s]).or_insert(Complex64::new(0.0, 0.0)) += Complex64::new(re, im);
    }
    CoefficientTensors::from_parts(one, two, record.constant, record.ordering)
}

/// Parsed FCIDUMP: spin-orbital tensors plus the header's electron count.
#[derive(Debug, Clone)]
pub struct Fcidump {
    pub tensors: CoefficientTensors,
    pub n_orbitals: usize,
    pub n_electrons: usize,
}

fn header_value(header: &str, key: &str) -> Option<String> {
    let upper = header.to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let mut from = 0;
    while let Some(pos) = upper[from..].find(key) {
        let start = from + pos;
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let rest = upper[start + key.len()..].trim_start();
        if before_ok && rest.starts_with('=') {
            let value: String = rest[1..]
                .trim_start()
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == '+' || *c == '.')
                .collect();
            return Some(value);
        }
        from = start + key.len();
    }
    None
}

/// Reads FCIDUMP text: a `&FCI … /` (or `&END`) namelist, then `value i j k l`
/// lines with 1-based spatial indices in chemists' notation.
///
/// `(ij|kl)` lines are expanded over the 8-fold permutational symmetry, `k = l = 0`
/// lines are one-electron integrals, all-zero indices give the core energy and
/// `i j 0 0`-style orbital energies (`j = k = l = 0`) are ignored. The result uses
/// interleaved spin-orbitals `2i` (alpha) and `2i + 1` (beta):
/// `½ Σ (ij|kl) a†_iσ a†_kτ a_lτ a_jσ = ½ Σ (ij|kl) E_iσ,jσ E_kτ,lτ − ½ Σ (ij|jl) E_iσ,lσ`.
pub fn read_fcidump(text: &str) -> Result<Fcidump> {
    let mut header = String::new();
    let mut body_start = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        header.push_str(trimmed);
        header.push(' ');
        let upper = trimmed.to_ascii_uppercase();
        if upper.ends_with('/') || upper.contains("&END") || upper == "/" {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or(Error::Parse {
        line: 1,
        message: "missing namelist terminator ('/' or '&END')".into(),
    })?;
    if !header.trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse {
            line: 1,
            message: "expected '&FCI' namelist".into(),
        });
    }
    let norb: usize = header_value(&header, "NORB")
        .and_then(|v| v.parse().ok())
        .ok_or(Error::Parse {
            line: 1,
            message: "NORB missing or not an integer".into(),
        })?;
    let nelec: usize = header_value(&header, "NELEC")
        .and_then(|v| v.parse().ok())
        .ok_or(Error::Parse {
            line: 1,
            message: "NELEC missing or not an integer".into(),
        })?;

    let mut core = 0.0;
    let mut h1 = DMatrix::<f64>::zeros(norb, norb);
    let mut eri: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(body_start) {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 'value i j k l', found {} fields", fields.len()),
            });
        }
        let value: f64 = fields[0].replace(['D', 'd'], "e").parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid number '{}'", fields[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid index '{f}'"),
            })?;
            if *slot > norb {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("index {slot} exceeds NORB = {norb}"),
                });
            }
        }
        match idx {
            [0, 0, 0, 0] => core = value,
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, 0, 0] if i > 0 && j > 0 => {
                h1[(i - 1, j - 1)] = value;
                h1[(j - 1, i - 1)] = value;
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                for key in [
                    [i, j, k, l],
                    [j, i, k, l],
                    [i, j, l, k],
                    [j, i, l, k],
                    [k, l, i, j],
                    [l, k, i, j],
                    [k, l, j, i],
                    [l, k, j, i],
                ] {
                    eri.insert(key, value);
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unsupported index pattern {idx:?}"),
                })
            }
        }
    }

    Ok(Fcidump {
        tensors: interleaved_order(&spin_free_tensors(norb, &h1, &eri, core)),
        n_orbitals: norb,
        n_electrons: nelec,
    })
}

/// Normal-ordered `Σ h_ij a†_iσ a_jσ + ½ Σ (ij|kl) a†_iσ a†_kτ a_lτ a_jσ + core`.
fn spin_free_tensors(norb: usize, h1: &DMatrix<f64>, eri: &BTreeMap<[usize; 4], f64>, core: f64) -> CoefficientTensors {
    let mut tensors = CoefficientTensors::zeros_with_ordering(2 * norb, TwoBodyOrdering::Normal);
    tensors.set_constant(core);
    for i in 0..norb {
        for j in 0..norb {
            if h1[(i, j)] != 0.0 {
                for s in 0..2 {
                    tensors.add_one_body(2 * i + s, 2 * j + s, Complex64::new(h1[(i, j)], 0.0));
                }
            }
        }
    }
    for (&[i, j, k, l], &v) in eri {
        if v == 0.0 {
            continue;
        }
        for s in 0..2 {
            for t in 0..2 {
                tensors.add_two_body([2 * i + s, 2 * k + t, 2 * l + t, 2 * j + s], Complex64::new(v, 0.0));
            }
        }
    }
    tensors
}

/// Dense `¼ (g_pqrs − g_qprs − g_pqsr + g_qpsr)`, which fixes the normal-ordered
/// two-body operator uniquely.
fn antisymmetrized(tensors: &CoefficientTensors) -> Vec<Complex64> {
    let n = tensors.n_spin_orbitals();
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let mut a = vec![Complex64::new(0.0, 0.0); n * n * n * n];
    for (&[p, q, r, s], &v) in tensors.two_body() {
        let w = v * 0.25;
        a[idx(p, q, r, s)] += w;
        a[idx(q, p, r, s)] -= w;
        a[idx(p, q, s, r)] -= w;
        a[idx(q, p, s, r)] += w;
    }
    a
}

/// Writes spin-restricted real tensors as FCIDUMP. Fails for operators that mix
/// spins, depend on spin or need complex integrals, which the format cannot express.
pub fn write_fcidump(tensors: &CoefficientTensors, n_electrons: usize) -> Result<String> {
    let t = normal_order(tensors);
    let n = t.n_spin_orbitals();
    if n % 2 != 0 {
        return Err(Error::InvalidParameter("FCIDUMP export needs an even number of spin-orbitals".into()));
    }
    let norb = n / 2;
    let tol = 1e-10;
    let unsupported = || Error::InvalidParameter("operator is not a real spin-free Hamiltonian".into());
    let a = antisymmetrized(&t);
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let mut eri = BTreeMap::new();
    for i in 0..norb {
        for j in 0..norb {
            for k in 0..norb {
                for l in 0..norb {
                    let v = a[idx(2 * i, 2 * k + 1, 2 * l + 1, 2 * j)] * 2.0;
                    if v.im.abs() > tol {
                        return Err(unsupported());
                    }
                    if v.re != 0.0 {
                        eri.insert([i, j, k, l], v.re);
                    }
                }
            }
        }
    }
    let mut h1 = DMatrix::<f64>::zeros(norb, norb);
    for i in 0..norb {
        for j in 0..norb {
            let v = t.one_body()[(2 * i, 2 * j)];
            if v.im.abs() > tol {
                return Err(unsupported());
            }
            h1[(i, j)] = v.re;
        }
    }
    let rebuilt = spin_free_tensors(norb, &h1, &eri, t.constant());
    let b = antisymmetrized(&rebuilt);
    let two_ok = a.iter().zip(&b).all(|(x, y)| (x - y).norm() <= tol);
    let one_ok = (t.one_body() - rebuilt.one_body()).iter().all(|z| z.norm() <= tol);
    let symmetric = eri.iter().all(|(&[i, j, k, l], &v)| {
        [[j, i, k, l], [i, j, l, k], [k, l, i, j]]
            .iter()
            .all(|key| (eri.get(key).copied().unwrap_or(0.0) - v).abs() <= tol)
    });
    if !(two_ok && one_ok && symmetric) {
        return Err(unsupported());
    }
    let mut out = format!(
        "&FCI NORB={norb},NELEC={n_electrons},MS2=0,\n ORBSYM={},\n ISYM=1,\n/\n",
        vec!["1"; norb].join(",")
    );
    let line = |v: f64, i: usize, j: usize, k: usize, l: usize| format!("{v:23.16e} {i:4} {j:4} {k:4} {l:4}\n");
    for (&[i, j, k, l], &v) in &eri {
        // one representative per 8-fold orbit
        let canonical = (i >= j) && (k >= l) && (i * norb + j >= k * norb + l);
        if canonical && v.abs() > tol {
            out.push_str(&line(v, i + 1, j + 1, k + 1, l + 1));
        }
    }
    for i in 0..norb {
        for j in 0..=i {
            if h1[(i, j)].abs() > tol {
                out.push_str(&line(h1[(i, j)], i + 1, j + 1, 0, 0));
            }
        }
    }
    out.push_str(&line(t.constant(), 0, 0, 0, 0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hubbard, HubbardParams};
    use crate::operator::jordan_wigner;

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(24.0), "24");
        assert_eq!(format_g12(-4.0 / std::f64::consts::PI), "-1.27323954474");
        assert_eq!(format_g12(1e-5), "1e-05");
        assert_eq!(format_g12(2.5e13), "2.5e+13");
        assert_eq!(format_g12(123456789012.0), "123456789012");
        assert_eq!(format_g12(0.0001234), "0.0001234");
    }

    #[test]
    fn json_round_trip() {
        let t = build_hubbard(&HubbardParams::half_filled(3)).unwrap();
        let text = tensors_to_json(&t).unwrap();
        let back = tensors_from_json(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(tensors_to_json(&back).unwrap(), text);
    }

    #[test]
    fn core_energy_only() {
        let f = read_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n  -1.25 0 0 0 0\n").unwrap();
        assert!(f.tensors.two_body().is_empty());
        assert!(f.tensors.one_body().iter().all(|z| z.norm() == 0.0));
        assert_eq!(f.tensors.constant(), -1.25);
        let sum = jordan_wigner(&f.tensors).unwrap();
        assert!((sum.identity().re + 1.25).abs() < 1e-15);
    }

    #[test]
    fn one_electron_only_is_spin_blocked() {
        let f = read_fcidump("&FCI NORB=2,NELEC=2 /\n 0.5 1 2 0 0\n -1.0 1 1 0 0\n").unwrap();
        let h = f.tensors.one_body();
        assert_eq!(h[(0, 2)].re, 0.5);
        assert_eq!(h[(1, 3)].re, 0.5);
        assert_eq!(h[(2, 0)].re, 0.5);
        assert_eq!(h[(0, 0)].re, -1.0);
        assert_eq!(h[(1, 1)].re, -1.0);
        assert_eq!(h[(0, 1)].re, 0.0);
        assert!(f.tensors.two_body().is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_fcidump("&FCI NORB=2,NELEC=2 /\n 0.5 1 2 0 0\n 0.1 1 3 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = read_fcidump("&FCI NORB=2,NELEC=2 /\n abc 1 2 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(read_fcidump("&FCI NELEC=2 /\n").is_err());
    }

    #[test]
    fn hubbard_round_trip_through_fcidump() {
        let t = build_hubbard(&HubbardParams::half_filled(3)).unwrap();
        let text = write_fcidump(&t, 3).unwrap();
        let back = read_fcidump(&text).unwrap();
        assert_eq!(back.n_electrons, 3);
        let a = jordan_wigner(&t).unwrap().to_matrix().unwrap();
        let b = jordan_wigner(&back.tensors).unwrap().to_matrix().unwrap();
        assert!((a - b).norm() < 1e-12);
    }
}
