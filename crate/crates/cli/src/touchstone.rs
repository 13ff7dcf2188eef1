//! Touchstone v1 reader and writer for 1-port and 2-port data.
//!
//! The reader accepts `!` comments, one `#` option line of the form
//! `# <HZ|KHZ|MHZ|GHZ> <S|Y|Z> <RI|MA|DB> R <resistance>` (tokens are
//! case-insensitive), and whitespace-separated numeric rows: frequency plus
//! 2 values for 1-port files, frequency plus 8 values in S11 S21 S12 S22
//! order for 2-port files. Frequencies are normalized to Hz on the way in.
//! The writer always emits Hz and enough digits that a read-back reproduces
//! every f64 exactly.

use num_complex::Complex64;
use sawfilt_core::{FrequencyGrid, OnePortResponse, SPoint, TwoPortResponse};

use crate::error::{Result, ShellError};
use crate::sha256_hex;

/// What the file's complex values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    S,
    Y,
    Z,
}

/// On-disk encoding of one complex value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueFormat {
    /// real, imaginary
    Ri,
    /// magnitude, angle in degrees
    Ma,
    /// 20·log10(magnitude) in dB, angle in degrees
    Db,
}

/// Per-frequency values; the variant fixes the port count.
#[derive(Debug, Clone, PartialEq)]
pub enum PortData {
    One(Vec<Complex64>),
    /// File order: s11, s21, s12, s22.
    Two(Vec<[Complex64; 4]>),
}

/// Contents of a Touchstone file after normalization: frequencies in Hz,
/// values as complex numbers regardless of the on-disk format.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneData {
    /// Strictly increasing, in Hz. A single row is legal on disk, so this is
    /// a plain vector rather than a sweep grid.
    pub freqs_hz: Vec<f64>,
    pub kind: ParamKind,
    /// Reference resistance from the option line, in ohm.
    pub z_ref: f64,
    pub values: PortData,
}

impl TouchstoneData {
    pub fn n_ports(&self) -> usize {
        match self.values {
            PortData::One(_) => 1,
            PortData::Two(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Captures a simulated two-port response as S-parameter file content.
    pub fn from_two_port_s(r: &TwoPortResponse) -> Self {
        let rows = r
            .samples()
            .iter()
            .map(|p| [p.s11, p.s21, p.s12, p.s22])
            .collect();
        TouchstoneData {
            freqs_hz: r.grid().points().to_vec(),
            kind: ParamKind::S,
            z_ref: r.z_ref(),
            values: PortData::Two(rows),
        }
    }

    /// Interprets 1-port data as an admittance sweep, converting from S or Z
    /// if needed. Needs at least two rows to form a sweep.
    pub fn to_one_port_admittance(&self) -> Result<OnePortResponse> {
        let PortData::One(vals) = &self.values else {
            return Err(ShellError::new("expected a 1-port file"));
        };
        let grid = FrequencyGrid::from_points(self.freqs_hz.clone())?;
        let one = Complex64::new(1.0, 0.0);
        let y: Vec<Complex64> = match self.kind {
            ParamKind::Y => vals.clone(),
            ParamKind::Z => vals.iter().map(|z| one / z).collect(),
            // Y = (1 - S) / (z_ref (1 + S)); S = -1 (a short) maps to inf,
            // which the response type carries through as a flagged point.
            ParamKind::S => vals
                .iter()
                .map(|s| (one - s) / (self.z_ref * (one + s)))
                .collect(),
        };
        Ok(OnePortResponse::new(grid, y, self.z_ref)?)
    }

    /// Interprets 2-port S-parameter data as a scattering response.
    pub fn to_two_port_s(&self) -> Result<TwoPortResponse> {
        let PortData::Two(rows) = &self.values else {
            return Err(ShellError::new("expected a 2-port file"));
        };
        if self.kind != ParamKind::S {
            return Err(ShellError::new(
                "2-port file must hold S parameters for analysis",
            ));
        }
        let grid = FrequencyGrid::from_points(self.freqs_hz.clone())?;
        let samples = rows
            .iter()
            .map(|v| SPoint {
                s11: v[0],
                s12: v[2],
                s21: v[1],
                s22: v[3],
            })
            .collect();
        Ok(TwoPortResponse::new(grid, samples, self.z_ref)?)
    }
}

fn decode_pair(fmt: ValueFormat, a: f64, b: f64) -> Complex64 {
    match fmt {
        ValueFormat::Ri => Complex64::new(a, b),
        ValueFormat::Ma => Complex64::from_polar(a, b.to_radians()),
        ValueFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

fn encode_pair(fmt: ValueFormat, v: Complex64) -> (f64, f64) {
    match fmt {
        ValueFormat::Ri => (v.re, v.im),
        ValueFormat::Ma => (v.norm(), v.arg().to_degrees()),
        ValueFormat::Db => (20.0 * v.norm().log10(), v.arg().to_degrees()),
    }
}

// scale-to-Hz, kind, format, reference resistance
type OptionLine = (f64, ParamKind, ValueFormat, f64);

fn parse_option_line(rest: &str, line_no: usize) -> Result<OptionLine> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() != 5 {
        return Err(ShellError(format!(
            "line {line_no}: option line must read '# <HZ|KHZ|MHZ|GHZ> <S|Y|Z> <RI|MA|DB> R <resistance>'"
        )));
    }
    let scale = match toks[0].to_ascii_uppercase().as_str() {
        "HZ" => 1.0,
        "KHZ" => 1e3,
        "MHZ" => 1e6,
        "GHZ" => 1e9,
        other => {
            return Err(ShellError(format!(
                "line {line_no}: unknown frequency unit {other:?}"
            )))
        }
    };
    let kind = match toks[1].to_ascii_uppercase().as_str() {
        "S" => ParamKind::S,
        "Y" => ParamKind::Y,
        "Z" => ParamKind::Z,
        other => {
            return Err(ShellError(format!(
                "line {line_no}: unsupported parameter type {other:?}"
            )))
        }
    };
    let fmt = match toks[2].to_ascii_uppercase().as_str() {
        "RI" => ValueFormat::Ri,
        "MA" => ValueFormat::Ma,
        "DB" => ValueFormat::Db,
        other => {
            return Err(ShellError(format!(
                "line {line_no}: unsupported value format {other:?}"
            )))
        }
    };
    if !toks[3].eq_ignore_ascii_case("r") {
        return Err(ShellError(format!(
            "line {line_no}: expected 'R' before the reference resistance, got {:?}",
            toks[3]
        )));
    }
    let z_ref: f64 = toks[4].parse().map_err(|_| {
        ShellError(format!(
            "line {line_no}: bad reference resistance {:?}",
            toks[4]
        ))
    })?;
    if !(z_ref.is_finite() && z_ref > 0.0) {
        return Err(ShellError(format!(
            "line {line_no}: reference resistance must be positive, got {z_ref}"
        )));
    }
    Ok((scale, kind, fmt, z_ref))
}

/// Parses Touchstone v1 text. Errors carry the 1-based line number.
pub fn read_touchstone(text: &str) -> Result<TouchstoneData> {
    let mut option: Option<OptionLine> = None;
    let mut freqs: Vec<f64> = Vec::new();
    let mut one: Vec<Complex64> = Vec::new();
    let mut two: Vec<[Complex64; 4]> = Vec::new();
    let mut n_ports: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('!') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if option.is_some() {
                return Err(ShellError(format!(
                    "line {line_no}: more than one option line"
                )));
            }
            option = Some(parse_option_line(rest, line_no)?);
            continue;
        }
        let Some((scale, _, fmt, _)) = option else {
            return Err(ShellError(format!(
                "line {line_no}: data before the option line"
            )));
        };
        let mut nums: Vec<f64> = Vec::with_capacity(9);
        for tok in line.split_whitespace() {
            nums.push(
                tok.parse()
                    .map_err(|_| ShellError(format!("line {line_no}: bad number {tok:?}")))?,
            );
        }
        let ports = match n_ports {
            Some(p) => p,
            None => {
                let p = match nums.len() {
                    3 => 1,
                    9 => 2,
                    n => {
                        return Err(ShellError(format!(
                            "line {line_no}: expected 3 columns (1-port) or 9 (2-port), got {n}"
                        )))
                    }
                };
                n_ports = Some(p);
                p
            }
        };
        let want = if ports == 1 { 3 } else { 9 };
        if nums.len() != want {
            return Err(ShellError(format!(
                "line {line_no}: expected {want} columns, got {}",
                nums.len()
            )));
        }
        let f_hz = nums[0] * scale;
        if !(f_hz.is_finite() && f_hz > 0.0) {
            return Err(ShellError(format!(
                "line {line_no}: frequency must be positive, got {f_hz} Hz"
            )));
        }
        if let Some(&last) = freqs.last() {
            if f_hz <= last {
                return Err(ShellError(format!(
                    "line {line_no}: frequency not strictly increasing"
                )));
            }
        }
        freqs.push(f_hz);
        if ports == 1 {
            one.push(decode_pair(fmt, nums[1], nums[2]));
        } else {
            two.push([
                decode_pair(fmt, nums[1], nums[2]),
                decode_pair(fmt, nums[3], nums[4]),
                decode_pair(fmt, nums[5], nums[6]),
                decode_pair(fmt, nums[7], nums[8]),
            ]);
        }
    }

    let Some((_, kind, _, z_ref)) = option else {
        return Err(ShellError::new("missing option line"));
    };
    if freqs.is_empty() {
        return Err(ShellError::new("no data rows"));
    }
    let values = match n_ports {
        Some(1) => PortData::One(one),
        _ => PortData::Two(two),
    };
    Ok(TouchstoneData {
        freqs_hz: freqs,
        kind,
        z_ref,
        values,
    })
}

fn fmt_token(fmt: ValueFormat) -> &'static str {
    match fmt {
        ValueFormat::Ri => "RI",
        ValueFormat::Ma => "MA",
        ValueFormat::Db => "DB",
    }
}

fn kind_token(kind: ParamKind) -> &'static str {
    match kind {
        ParamKind::S => "S",
        ParamKind::Y => "Y",
        ParamKind::Z => "Z",
    }
}

/// Serializes to Touchstone v1 text: frequencies in Hz, 17 significant
/// digits per number so every f64 survives a round trip. The leading comment
/// records the tool and a hash of the data section; `source` adds one more
/// provenance line (e.g. the hash of the config that produced the sweep).
/// No timestamps or absolute paths, so identical data gives identical bytes.
pub fn write_touchstone(d: &TouchstoneData, fmt: ValueFormat, source: Option<&str>) -> String {
    let mut body = String::new();
    body.push_str(&format!(
        "# HZ {} {} R {}\n",
        kind_token(d.kind),
        fmt_token(fmt),
        d.z_ref
    ));
    let row = |body: &mut String, f: f64, vals: &[Complex64]| {
        body.push_str(&format!("{f:.16e}"));
        for &v in vals {
            let (a, b) = encode_pair(fmt, v);
            body.push_str(&format!(" {a:.16e} {b:.16e}"));
        }
        body.push('\n');
    };
    match &d.values {
        PortData::One(vals) => {
            for (i, &v) in vals.iter().enumerate() {
                row(&mut body, d.freqs_hz[i], &[v]);
            }
        }
        PortData::Two(rows) => {
            for (i, vals) in rows.iter().enumerate() {
                row(&mut body, d.freqs_hz[i], vals);
            }
        }
    }
    let digest = sha256_hex(body.as_bytes());
    let mut out = format!("! sawfilt export, data sha256 {digest}\n");
    if let Some(s) = source {
        out.push_str(&format!("! source {s}\n"));
    }
    out.push_str(&body);
    out
}
