//! Text serialization for codes, real functions, product measures,
//! gluings and configurations. Every format is line-oriented with a
//! versioned header and round-trips bit-exactly.

use crate::code::Code;
use crate::configs::Configuration;
use crate::gluing::Gluing;
use crate::measure::ProductMeasure;
use crate::realfn::RealFn;
use crate::space::{MixedShape, Point, Shape};
use crate::{Error, Rat, Result};
use num::BigInt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeEncoding {
    /// One member per line, space-separated 1-based symbols.
    List,
    /// Hex dump of the indicator bitmap, little-endian by rank.
    Hex,
}

fn header_fields<'a>(line: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) || parts.next() != Some("v1") {
        return Err(Error::Parse(format!("expected `{tag} v1` header, got `{line}`")));
    }
    parts
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header field `{tok}`")))
        })
        .collect()
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|&(_, v)| v)
        .ok_or_else(|| Error::Parse(format!("missing header field `{key}`")))
}

fn parse_num<T: FromStr>(text: &str, what: &str) -> Result<T> {
    text.parse::<T>()
        .map_err(|_| Error::Parse(format!("bad {what} `{text}`")))
}

pub fn write_code(f: &Code, enc: CodeEncoding) -> String {
    let shape = f.shape();
    let mut out = format!(
        "anticode v1 m={} n={} enc={}\n",
        shape.m(),
        shape.n(),
        match enc {
            CodeEncoding::List => "list",
            CodeEncoding::Hex => "hex",
        }
    );
    match enc {
        CodeEncoding::List => {
            for p in f.members() {
                out.push_str(&p.to_string());
                out.push('\n');
            }
        }
        CodeEncoding::Hex => {
            for b in f.indicator_bytes() {
                out.push_str(&format!("{b:02x}"));
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_code(text: &str) -> Result<Code> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty code file".into()))?;
    let fields = header_fields(header, "anticode")?;
    let m: u32 = parse_num(field(&fields, "m")?, "alphabet size")?;
    let n: u32 = parse_num(field(&fields, "n")?, "length")?;
    let shape = Shape::new(m, n)?;
    match field(&fields, "enc")? {
        "list" => {
            let mut code = Code::empty(&shape);
            for line in lines {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let symbols = line
                    .split_whitespace()
                    .map(|t| parse_num::<u32>(t, "symbol"))
                    .collect::<Result<Vec<_>>>()?;
                code.insert(&Point::from_symbols(&symbols, &shape)?);
            }
            Ok(code)
        }
        "hex" => {
            let payload: String = lines.collect::<Vec<_>>().concat();
            let payload = payload.trim();
            if payload.len() % 2 != 0 {
                return Err(Error::Parse("odd-length hex payload".into()));
            }
            let bytes = (0..payload.len() / 2)
                .map(|i| {
                    u8::from_str_radix(&payload[2 * i..2 * i + 2], 16)
                        .map_err(|_| Error::Parse("bad hex byte".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            Code::from_indicator_bytes(&shape, &bytes)
        }
        other => Err(Error::Parse(format!("unknown encoding `{other}`"))),
    }
}

fn radices_text(radices: &[u16]) -> String {
    radices.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_radices(text: &str) -> Result<Vec<u16>> {
    text.split(',').map(|t| parse_num::<u16>(t, "radix")).collect()
}

pub fn write_realfn(f: &RealFn) -> String {
    let shape = f.shape();
    let mut out = format!("realfn v1 n={} radices={}\n", shape.n(), radices_text(shape.radices()));
    for v in f.values() {
        // 17 significant digits: exact f64 round-trip.
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}

pub fn read_realfn(text: &str) -> Result<RealFn> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty realfn file".into()))?;
    let fields = header_fields(header, "realfn")?;
    let n: usize = parse_num(field(&fields, "n")?, "length")?;
    let radices = parse_radices(field(&fields, "radices")?)?;
    if radices.len() != n {
        return Err(Error::Parse(format!("{} radices for n={n}", radices.len())));
    }
    let shape = MixedShape::new(radices)?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|t| parse_num::<f64>(t, "value"))
        .collect::<Result<Vec<_>>>()?;
    RealFn::new(shape, values)
}

fn write_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rat(text: &str) -> Result<Rat> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| Error::Parse(format!("bad rational `{text}`")))?;
    let num = BigInt::from_str(num).map_err(|_| Error::Parse(format!("bad numerator `{num}`")))?;
    let den = BigInt::from_str(den).map_err(|_| Error::Parse(format!("bad denominator `{den}`")))?;
    if den == BigInt::from(0) {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rat::new(num, den))
}

/// Measures are written as exact fractions so the row sums survive the
/// round-trip exactly.
pub fn write_measure(nu: &ProductMeasure) -> String {
    let radices: Vec<u16> = (0..nu.n()).map(|i| nu.radix(i) as u16).collect();
    let mut out = format!("measure v1 n={} radices={}\n", nu.n(), radices_text(&radices));
    for i in 0..nu.n() {
        let row: Vec<String> = nu.factor(i).iter().map(write_rat).collect();
        out.push_str(&format!("{}: {}\n", i + 1, row.join(" ")));
    }
    out
}

pub fn read_measure(text: &str) -> Result<ProductMeasure> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty measure file".into()))?;
    let fields = header_fields(header, "measure")?;
    let n: usize = parse_num(field(&fields, "n")?, "length")?;
    let radices = parse_radices(field(&fields, "radices")?)?;
    if radices.len() != n {
        return Err(Error::Parse(format!("{} radices for n={n}", radices.len())));
    }
    let mut factors = vec![None; n];
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (idx, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad measure line `{line}`")))?;
        let i: usize = parse_num(idx.trim(), "coordinate")?;
        if i < 1 || i > n {
            return Err(Error::Parse(format!("coordinate {i} outside 1..={n}")));
        }
        let row = rest
            .split_whitespace()
            .map(parse_rat)
            .collect::<Result<Vec<_>>>()?;
        if row.len() != radices[i - 1] as usize {
            return Err(Error::Parse(format!(
                "coordinate {i} needs {} entries, got {}",
                radices[i - 1],
                row.len()
            )));
        }
        factors[i - 1] = Some(row);
    }
    let factors = factors
        .into_iter()
        .enumerate()
        .map(|(i, f)| f.ok_or_else(|| Error::Parse(format!("missing coordinate {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    ProductMeasure::new(factors)
}

pub fn write_gluing(pi: &Gluing) -> String {
    let mut out = format!("gluing v1 n={}\n", pi.n());
    for i in 0..pi.n() {
        let images: Vec<String> = pi.map(i).iter().map(|&a| (a + 1).to_string()).collect();
        out.push_str(&format!("{}: {}\n", i + 1, images.join(" ")));
    }
    out
}

pub fn read_gluing(text: &str) -> Result<Gluing> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty gluing file".into()))?;
    let fields = header_fields(header, "gluing")?;
    let n: usize = parse_num(field(&fields, "n")?, "length")?;
    let mut maps = vec![None; n];
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (idx, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad gluing line `{line}`")))?;
        let i: usize = parse_num(idx.trim(), "coordinate")?;
        if i < 1 || i > n {
            return Err(Error::Parse(format!("coordinate {i} outside 1..={n}")));
        }
        let map = rest
            .split_whitespace()
            .map(|t| {
                let v: u16 = parse_num(t, "image symbol")?;
                if v < 1 {
                    return Err(Error::Parse("image symbols are 1-based".into()));
                }
                Ok(v - 1)
            })
            .collect::<Result<Vec<_>>>()?;
        maps[i - 1] = Some(map);
    }
    let maps = maps
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.ok_or_else(|| Error::Parse(format!("missing coordinate {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Gluing::new(maps)
}

pub fn write_config(cfg: &Configuration) -> Result<String> {
    if cfg.ell() == 0 {
        return Err(Error::Invalid(
            "cannot serialize a configuration with zero parts".into(),
        ));
    }
    let sizes: Vec<String> = cfg.part_sizes().iter().map(|s| s.to_string()).collect();
    let mut out = format!("config v1 parts={}\n", sizes.join(","));
    for e in cfg.edges() {
        let verts: Vec<String> = e.iter().map(|&v| (v + 1).to_string()).collect();
        out.push_str(&verts.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_config(text: &str) -> Result<Configuration> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty config file".into()))?;
    let fields = header_fields(header, "config")?;
    let parts: Vec<usize> = field(&fields, "parts")?
        .split(',')
        .map(|t| parse_num::<usize>(t, "part size"))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let edge = line
            .split_whitespace()
            .map(|t| {
                let v: usize = parse_num(t, "vertex")?;
                if v < 1 {
                    return Err(Error::Parse("vertex indices are 1-based".into()));
                }
                Ok(v - 1)
            })
            .collect::<Result<Vec<_>>>()?;
        edges.push(edge);
    }
    Configuration::new(parts, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::random_factor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn code_list_round_trip_is_bit_exact() {
        let shape = Shape::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let text = write_code(&f, CodeEncoding::List);
            let back = read_code(&text).unwrap();
            assert_eq!(back.indicator_bytes(), f.indicator_bytes());
            assert_eq!(write_code(&back, CodeEncoding::List), text);
        }
    }

    #[test]
    fn code_hex_round_trip_is_bit_exact() {
        let shape = Shape::new(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.3));
            let text = write_code(&f, CodeEncoding::Hex);
            let back = read_code(&text).unwrap();
            assert_eq!(back.indicator_bytes(), f.indicator_bytes());
            assert_eq!(write_code(&back, CodeEncoding::Hex), text);
        }
    }

    #[test]
    fn code_golden_header_and_symbols() {
        let shape = Shape::new(3, 2).unwrap();
        let mut f = Code::empty(&shape);
        f.insert_rank(0);
        f.insert_rank(4);
        let text = write_code(&f, CodeEncoding::List);
        assert_eq!(text, "anticode v1 m=3 n=2 enc=list\n1 1\n2 2\n");
    }

    #[test]
    fn code_rejects_malformed_input() {
        assert!(read_code("").is_err());
        assert!(read_code("anticode v2 m=3 n=2 enc=list\n").is_err());
        assert!(read_code("anticode v1 m=3 n=2 enc=list\n4 1\n").is_err());
        assert!(read_code("anticode v1 m=3 n=2 enc=hex\nabc\n").is_err());
        assert!(read_code("anticode v1 m=3 n=2 enc=hex\nffff\n").is_err());
    }

    #[test]
    fn realfn_round_trip_preserves_every_bit() {
        let shape = MixedShape::new(vec![3, 2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = RealFn::from_fn(shape, |_| rng.random_range(-2.0..2.0));
        let text = write_realfn(&f);
        let back = read_realfn(&text).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(write_realfn(&back), text);
    }

    #[test]
    fn measure_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nu = ProductMeasure::new(
            (0..3).map(|_| random_factor(4, 64, &mut rng)).collect(),
        )
        .unwrap();
        let text = write_measure(&nu);
        let back = read_measure(&text).unwrap();
        for i in 0..3 {
            assert_eq!(back.factor(i), nu.factor(i));
        }
    }

    #[test]
    fn gluing_round_trip_and_golden_line() {
        let pi = Gluing::new(vec![vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let text = write_gluing(&pi);
        assert_eq!(text, "gluing v1 n=2\n1: 1 1 2\n2: 2 1 1\n");
        assert_eq!(read_gluing(&text).unwrap(), pi);
    }

    #[test]
    fn config_round_trip_with_multiplicity() {
        let cfg = Configuration::new(
            vec![2, 2],
            vec![vec![0, 0], vec![0, 0], vec![1, 1]],
        )
        .unwrap();
        let text = write_config(&cfg).unwrap();
        assert_eq!(text, "config v1 parts=2,2\n1 1\n1 1\n2 2\n");
        assert_eq!(read_config(&text).unwrap(), cfg);
    }

    #[test]
    fn config_with_zero_parts_is_not_serializable() {
        assert!(write_config(&Configuration::pair_config(0)).is_err());
    }
}
