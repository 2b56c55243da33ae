//! Line-oriented circuit listings.
//!
//! ```text
//! # qhsl-circuit v1 qubits=9
//! H t=0
//! R(1.0471975512,2.0943951024) t=8 c=[0=1,1=0]
//! ```

use std::path::Path;

use crate::error::{QhslError, Result};
use crate::sim::{Circuit, ControlPattern, Gate};

use super::{read_text, write_atomic};

const HEADER: &str = "# qhsl-circuit v1";

/// Ten decimals when that reproduces the value, otherwise the shortest
/// representation that does.
fn format_angle(a: f64) -> String {
    let fixed = format!("{a:.10}");
    if fixed.parse::<f64>().ok() == Some(a) {
        fixed
    } else {
        format!("{a}")
    }
}

fn format_gate(g: &Gate) -> String {
    match *g {
        Gate::Ry(a) | Gate::Rz(a) => format!("{}({})", g.name(), format_angle(a)),
        Gate::R { phi, theta } => format!("R({},{})", format_angle(phi), format_angle(theta)),
        _ => g.name().to_string(),
    }
}

pub fn format_circuit(c: &Circuit) -> String {
    let mut out = format!("{HEADER} qubits={}\n", c.num_qubits());
    for ins in c.instructions() {
        out.push_str(&format_gate(&ins.gate));
        out.push_str(&format!(" t={}", ins.target));
        if !ins.controls.is_empty() {
            let list: Vec<String> = ins
                .controls
                .controls()
                .iter()
                .map(|&(q, v)| format!("{q}={}", u8::from(v)))
                .collect();
            out.push_str(&format!(" c=[{}]", list.join(",")));
        }
        out.push('\n');
    }
    out
}

fn parse_angle(s: &str, line: usize) -> Result<f64> {
    let a: f64 = s
        .trim()
        .parse()
        .map_err(|_| QhslError::parse(line, format!("bad angle {s:?}")))?;
    if !a.is_finite() {
        return Err(QhslError::parse(line, format!("angle {s:?} is not finite")));
    }
    Ok(a)
}

fn parse_gate(spec: &str, line: usize) -> Result<Gate> {
    let (name, args) = match spec.find('(') {
        Some(open) => {
            let inner = spec[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| QhslError::parse(line, "unclosed parameter list"))?;
            (&spec[..open], Some(inner))
        }
        None => (spec, None),
    };
    let params: Vec<f64> = match args {
        Some(a) => a.split(',').map(|s| parse_angle(s, line)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let gate = match (name, params.as_slice()) {
        ("RY", [a]) => Gate::Ry(*a),
        ("RZ", [a]) => Gate::Rz(*a),
        ("R", [phi, theta]) => Gate::R { phi: *phi, theta: *theta },
        ("H", []) => Gate::H,
        ("X", []) => Gate::X,
        ("I", []) => Gate::I,
        ("SET0", []) => Gate::Set0,
        ("SET1", []) => Gate::Set1,
        ("U1", []) => Gate::U1,
        ("U2", []) => Gate::U2,
        _ => {
            return Err(QhslError::parse(
                line,
                format!("unknown gate or wrong parameter count: {spec}"),
            ))
        }
    };
    Ok(gate)
}

fn parse_controls(list: &str, line: usize) -> Result<ControlPattern> {
    let mut controls = Vec::new();
    for item in list.split(',').filter(|s| !s.is_empty()) {
        let (q, v) = item
            .split_once('=')
            .ok_or_else(|| QhslError::parse(line, format!("bad control {item:?}")))?;
        let q: usize = q
            .parse()
            .map_err(|_| QhslError::parse(line, format!("bad control qubit {q:?}")))?;
        let v = match v {
            "0" => false,
            "1" => true,
            _ => return Err(QhslError::parse(line, format!("control value must be 0 or 1, found {v:?}"))),
        };
        controls.push((q, v));
    }
    ControlPattern::new(controls).map_err(|e| QhslError::parse(line, e.to_string()))
}

fn parse_instruction(c: &mut Circuit, text: &str, line: usize) -> Result<()> {
    let split = match text.find('(') {
        Some(open) if text[..open].chars().all(|ch| ch.is_ascii_alphanumeric()) => text[open..]
            .find(')')
            .map(|close| open + close + 1)
            .ok_or_else(|| QhslError::parse(line, "unclosed parameter list"))?,
        _ => text.find(char::is_whitespace).unwrap_or(text.len()),
    };
    let gate = parse_gate(&text[..split].replace(char::is_whitespace, ""), line)?;
    let rest: String = text[split..].chars().filter(|ch| !ch.is_whitespace()).collect();
    let rest = rest
        .strip_prefix("t=")
        .ok_or_else(|| QhslError::parse(line, "missing target `t=`"))?;
    let digits = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
    let target: usize = rest[..digits]
        .parse()
        .map_err(|_| QhslError::parse(line, "bad target qubit"))?;
    let controls = match &rest[digits..] {
        "" => ControlPattern::empty(),
        tail => {
            let list = tail
                .strip_prefix("c=[")
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| QhslError::parse(line, format!("unexpected trailing text {tail:?}")))?;
            parse_controls(list, line)?
        }
    };
    c.push(gate, target, controls).map_err(|e| QhslError::parse(line, e.to_string()))
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hi, header) = lines.next().ok_or_else(|| QhslError::parse(1, "empty circuit file"))?;
    let qubits = header
        .trim()
        .strip_prefix(HEADER)
        .and_then(|r| r.trim().strip_prefix("qubits="))
        .ok_or_else(|| QhslError::parse(hi + 1, format!("expected `{HEADER} qubits=<k>`")))?;
    let qubits: usize = qubits
        .trim()
        .parse()
        .map_err(|_| QhslError::parse(hi + 1, format!("bad qubit count {qubits:?}")))?;
    let mut c = Circuit::new(qubits);
    for (i, raw) in lines {
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            parse_instruction(&mut c, body, i + 1)?;
        }
    }
    Ok(c)
}

pub fn export_circuit(c: &Circuit, path: &Path) -> Result<()> {
    write_atomic(path, format_circuit(c).as_bytes())
}

pub fn import_circuit(path: &Path) -> Result<Circuit> {
    read_text(path, parse_circuit)
}
