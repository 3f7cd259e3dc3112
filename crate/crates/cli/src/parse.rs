//! Value parsers for sizes, ranges and lists.

use std::path::PathBuf;

/// Bytes from `N`, `NKiB`, `NMiB` or `NGiB` (powers of two).
pub fn size(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (num, mult) = [("GiB", 1u64 << 30), ("MiB", 1 << 20), ("KiB", 1 << 10), ("B", 1)]
        .iter()
        .find_map(|&(suf, m)| s.strip_suffix(suf).map(|n| (n, m)))
        .unwrap_or((s, 1));
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("invalid size '{s}' (expected e.g. 8MiB, 512KiB, 1GiB)"))?;
    let bytes = v * mult as f64;
    if !(bytes >= 1.0) || bytes.fract() != 0.0 {
        return Err(format!("size '{s}' must be a positive whole number of bytes"));
    }
    Ok(bytes as u64)
}

/// Bandwidth in bytes/s: plain number or with a `GB/s`, `MB/s`, `kB/s`
/// suffix (powers of ten).
pub fn bandwidth(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, mult) = [("GB/s", 1e9), ("MB/s", 1e6), ("kB/s", 1e3), ("B/s", 1.0)]
        .iter()
        .find_map(|&(suf, m)| s.strip_suffix(suf).map(|n| (n, m)))
        .unwrap_or((s, 1.0));
    let v: f64 = num.trim().parse().map_err(|_| format!("invalid bandwidth '{s}'"))?;
    if !(v > 0.0) {
        return Err(format!("bandwidth '{s}' must be positive"));
    }
    Ok(v * mult)
}

/// `LX[,LY[,LZ]]`, missing extents default to 1.
pub fn dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(format!("invalid dims '{s}' (expected LX[,LY[,LZ]])"));
    }
    let mut d = [1usize; 3];
    for (i, p) in parts.iter().enumerate() {
        d[i] = p.trim().parse().map_err(|_| format!("invalid extent '{p}'"))?;
        if d[i] == 0 {
            return Err("extents must be >= 1".into());
        }
    }
    Ok(d)
}

pub fn vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.trim().parse().map_err(|_| format!("invalid number '{p}'"))?;
    }
    Ok(v)
}

/// `A..B` (inclusive), `A` or `A,B,C`.
pub fn int_range(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("invalid range '{s}' (expected A..B or A,B,C)");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

/// Comma-separated sizes. An `...` entry continues the geometric
/// progression of the two preceding sizes up to the final one.
pub fn size_list(s: &str) -> Result<Vec<u64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let mut out: Vec<u64> = Vec::new();
    let mut i = 0;
    while i < parts.len() {
        if parts[i] == "..." {
            let last = parts.get(i + 1).ok_or("'...' must be followed by a final size")?;
            let last = size(last)?;
            if out.len() < 2 || out[out.len() - 1] <= out[out.len() - 2] {
                return Err("'...' needs two increasing sizes before it".into());
            }
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let ratio = b as f64 / a as f64;
            let mut next = b as f64 * ratio;
            while next.round() as u64 <= last {
                out.push(next.round() as u64);
                next *= ratio;
            }
            if *out.last().unwrap() != last {
                out.push(last);
            }
            i += 2;
        } else {
            out.push(size(parts[i])?);
            i += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum XSpec {
    Ones,
    Rand(u64),
    File(PathBuf),
}

pub fn x_spec(s: &str) -> Result<XSpec, String> {
    if s == "ones" {
        Ok(XSpec::Ones)
    } else if let Some(seed) = s.strip_prefix("rand:") {
        seed.parse().map(XSpec::Rand).map_err(|_| format!("invalid seed in '{s}'"))
    } else if let Some(p) = s.strip_prefix("file:") {
        Ok(XSpec::File(PathBuf::from(p)))
    } else {
        Err(format!("invalid --x '{s}' (expected ones, rand:SEED or file:PATH)"))
    }
}
