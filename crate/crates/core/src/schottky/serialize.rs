//! Descriptor files: TOML with every float written as a C99 hexadecimal
//! literal so that a write/read cycle is bit-exact.

use serde::{Deserialize, Serialize};

use super::{BuildParams, Cap, ConditionResult, SchottkyDescriptor, VerificationRecord};
use crate::error::{Error, Result};
use crate::hermitian::{BoundaryPoint, CMat, CVec, GroupElement, C64};

const FORMAT: &str = "chdim-schottky-descriptor";
const SCHEMA: u32 = 1;

/// C99 hexadecimal representation, e.g. `0x1.8p+1` for 3.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    format!("{sign}0x{lead}{dot}p{e:+}")
}

/// Parses hexadecimal float literals (`[-]0xH[.H]p[+-]D`), `inf`, `-inf`, `nan`.
/// Literals needing more than 53 significant bits are rejected.
pub fn parse_hex(s: &str) -> Result<f64> {
    let err = || Error::Parse(format!("invalid hexadecimal float {s:?}"));
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(err)?;
    let (mant, exp) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().map_err(|_| err())?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let mut m: u128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        let d = c.to_digit(16).ok_or_else(err)? as u128;
        m = m.checked_mul(16).and_then(|v| v.checked_add(d)).ok_or_else(err)?;
    }
    if m == 0 {
        return Ok(if neg { -0.0 } else { 0.0 });
    }
    let mut e = exp - 4 * frac_part.len() as i64;
    // Strip trailing zero bits so the significand fits when possible.
    while m & 1 == 0 {
        m >>= 1;
        e += 1;
    }
    if m >> 53 != 0 {
        return Err(Error::Parse(format!("{s:?} needs more than 53 significant bits")));
    }
    let mut v = m as f64;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v *= 2f64.powi(e as i32);
    Ok(if neg { -v } else { v })
}

fn hexes(xs: impl IntoIterator<Item = f64>) -> Vec<String> {
    xs.into_iter().map(format_hex).collect()
}

fn unhex(xs: &[String]) -> Result<Vec<f64>> {
    xs.iter().map(|s| parse_hex(s)).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    n: usize,
    k: usize,
    t0: String,
    power_cap: u32,
    slack: String,
    resolution: usize,
    margin: String,
    chain_separation: String,
    forced_shared_chain: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    /// Row-major real parts.
    re: Vec<String>,
    im: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    letter: i32,
    center_re: Vec<String>,
    center_im: Vec<String>,
    radius: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionFile {
    index: usize,
    passed: bool,
    margin: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerificationFile {
    resolution: usize,
    margin: String,
    conditions: Vec<ConditionFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    format: String,
    schema: u32,
    version: String,
    n: usize,
    seed: u64,
    power: u32,
    params: ParamsFile,
    generators: Vec<MatrixFile>,
    domains: Vec<DomainFile>,
    verification: VerificationFile,
}

pub(super) fn to_toml(s: &SchottkyDescriptor) -> String {
    let p = &s.params;
    let file = DescriptorFile {
        format: FORMAT.into(),
        schema: SCHEMA,
        version: s.version.clone(),
        n: s.n,
        seed: s.seed,
        power: s.power,
        params: ParamsFile {
            n: p.n,
            k: p.k,
            t0: format_hex(p.t0),
            power_cap: p.power_cap,
            slack: format_hex(p.slack),
            resolution: p.resolution,
            margin: format_hex(p.margin),
            chain_separation: format_hex(p.chain_separation),
            forced_shared_chain: p.forced_shared_chain,
        },
        generators: s
            .gens
            .iter()
            .map(|g| {
                let m = g.matrix();
                let d = m.nrows();
                let entries: Vec<C64> = (0..d).flat_map(|i| (0..d).map(move |j| m[(i, j)])).collect();
                MatrixFile { re: hexes(entries.iter().map(|c| c.re)), im: hexes(entries.iter().map(|c| c.im)) }
            })
            .collect(),
        domains: s
            .domains
            .iter()
            .enumerate()
            .map(|(l, c)| DomainFile {
                letter: super::words::signed_label(l as u8),
                center_re: hexes(c.center.vector().iter().map(|z| z.re)),
                center_im: hexes(c.center.vector().iter().map(|z| z.im)),
                radius: format_hex(c.radius),
            })
            .collect(),
        verification: VerificationFile {
            resolution: s.verification.resolution,
            margin: format_hex(s.verification.margin),
            conditions: s
                .verification
                .conditions
                .iter()
                .enumerate()
                .filter_map(|(i, c)| {
                    c.map(|c| ConditionFile { index: i + 1, passed: c.passed, margin: format_hex(c.margin) })
                })
                .collect(),
        },
    };
    toml::to_string(&file).expect("descriptor serializes")
}

pub(super) fn from_toml(text: &str) -> Result<SchottkyDescriptor> {
    let file: DescriptorFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.format != FORMAT || file.schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported descriptor format {} schema {}", file.format, file.schema)));
    }
    let n = file.n;
    let d = n + 1;
    let p = &file.params;
    let params = BuildParams {
        n: p.n,
        k: p.k,
        t0: parse_hex(&p.t0)?,
        power_cap: p.power_cap,
        slack: parse_hex(&p.slack)?,
        resolution: p.resolution,
        margin: parse_hex(&p.margin)?,
        chain_separation: parse_hex(&p.chain_separation)?,
        forced_shared_chain: p.forced_shared_chain,
    };
    let mut gens = Vec::new();
    for (i, g) in file.generators.iter().enumerate() {
        let (re, im) = (unhex(&g.re)?, unhex(&g.im)?);
        if re.len() != d * d || im.len() != d * d {
            return Err(Error::Parse(format!("generator {} has {} entries, expected {}", i + 1, re.len(), d * d)));
        }
        let m = CMat::from_fn(d, d, |r, c| C64::new(re[r * d + c], im[r * d + c]));
        gens.push(GroupElement::new(m)?.classified()?);
    }
    if gens.is_empty() {
        return Err(Error::Parse("descriptor has no generators".into()));
    }
    if file.domains.len() != 2 * gens.len() {
        return Err(Error::Parse(format!("{} domains for {} generators", file.domains.len(), gens.len())));
    }
    let mut domains = Vec::new();
    for (l, dom) in file.domains.iter().enumerate() {
        if dom.letter != super::words::signed_label(l as u8) {
            return Err(Error::Parse(format!("domain {} has letter {}", l + 1, dom.letter)));
        }
        let (re, im) = (unhex(&dom.center_re)?, unhex(&dom.center_im)?);
        if re.len() != d || im.len() != d {
            return Err(Error::Parse(format!("domain centre of length {}, expected {d}", re.len())));
        }
        let z = CVec::from_fn(d, |i, _| C64::new(re[i], im[i]));
        // Validate, then keep the stored representative unchanged.
        BoundaryPoint::new(z.clone())?;
        let radius = parse_hex(&dom.radius)?;
        if !(radius > 0.0) {
            return Err(Error::Parse(format!("domain {} has non-positive radius", l + 1)));
        }
        domains.push(Cap::new(BoundaryPoint::from_canonical_unchecked(z), radius));
    }
    let mut conditions = [None; 4];
    for c in &file.verification.conditions {
        if c.index == 0 || c.index > 4 {
            return Err(Error::Parse(format!("condition index {}", c.index)));
        }
        conditions[c.index - 1] = Some(ConditionResult { passed: c.passed, margin: parse_hex(&c.margin)? });
    }
    Ok(SchottkyDescriptor {
        n,
        seed: file.seed,
        params,
        power: file.power,
        gens,
        domains,
        verification: VerificationRecord {
            resolution: file.verification.resolution,
            margin: parse_hex(&file.verification.margin)?,
            conditions,
        },
        version: file.version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_examples() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
        assert_eq!(parse_hex("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse_hex("0x10").unwrap(), 16.0);
        assert_eq!(parse_hex("-0x.8p1").unwrap(), -1.0);
        assert!(parse_hex("1.5").is_err());
        assert!(parse_hex("0x1.00000000000001p0").is_err());
        assert!(parse_hex("nan").unwrap().is_nan());
    }

    proptest! {
        #[test]
        fn hex_round_trip_bits(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let y = parse_hex(&format_hex(x)).unwrap();
            if x.is_nan() {
                prop_assert!(y.is_nan());
            } else {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
