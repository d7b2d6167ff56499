//! OpenQASM 3 export and the canonical JSON circuit document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{AdderKind, Circuit, CircuitError, Gate, RegisterLayout, Role, WireIndex};

pub const FORMAT_VERSION: &str = "1.0";

const QASM_HEADER: &str = "OPENQASM 3.0;\ninclude \"stdgates.inc\";\n";

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("unsupported format_version `{0}` (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("layout: {0}")]
    Layout(String),
    #[error("gate {index}: {source}")]
    Gate {
        index: usize,
        #[source]
        source: CircuitError,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("qasm line {line}: {message}")]
    Qasm { line: usize, message: String },
}

/// Renders a circuit as OpenQASM 3.0 over one register `q`.
///
/// `x`, `cx` and `ccx` cover zero to two controls; three or more use
/// `ctrl(k) @ x`. Operands are the controls in ascending order, then the
/// target.
pub fn export_qasm(circuit: &Circuit) -> String {
    let mut out = String::from(QASM_HEADER);
    let name: String = circuit.name().chars().filter(|c| !c.is_control()).collect();
    let _ = writeln!(out, "// circuit: {name}");
    let _ = writeln!(out, "qubit[{}] q;", circuit.width());
    for gate in circuit.gates() {
        match gate.arity() {
            0 => out.push_str("x "),
            1 => out.push_str("cx "),
            2 => out.push_str("ccx "),
            k => {
                let _ = write!(out, "ctrl({k}) @ x ");
            }
        }
        for (i, w) in gate.wires().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "q[{w}]");
        }
        out.push_str(";\n");
    }
    out
}

/// Reads back the subset of OpenQASM 3 that [`export_qasm`] writes.
///
/// Comments, the version line and `include` are skipped; exactly one
/// `qubit[N] name;` declaration is required before the first gate.
pub fn parse_qasm(text: &str, name: &str) -> Result<Circuit, DocumentError> {
    let mut register: Option<(String, Circuit)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| DocumentError::Qasm {
            line: line_no,
            message,
        };
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with("OPENQASM") || line.starts_with("include") {
            continue;
        }
        let stmt = line
            .strip_suffix(';')
            .ok_or_else(|| err("missing `;`".into()))?
            .trim();
        if let Some(decl) = stmt.strip_prefix("qubit[") {
            if register.is_some() {
                return Err(err("only one qubit register is supported".into()));
            }
            let (size, reg) = decl
                .split_once(']')
                .ok_or_else(|| err("malformed qubit declaration".into()))?;
            let width: usize = size
                .trim()
                .parse()
                .map_err(|_| err(format!("bad register size `{size}`")))?;
            let circuit = Circuit::new(width, name, None).map_err(|e| err(e.to_string()))?;
            register = Some((reg.trim().to_owned(), circuit));
            continue;
        }
        let (reg, circuit) = register
            .take()
            .ok_or_else(|| err("gate before qubit declaration".into()))?;
        let (op, args) = split_gate(stmt).ok_or_else(|| err(format!("cannot parse `{stmt}`")))?;
        let arity = match op.as_str() {
            "x" => 0,
            "cx" => 1,
            "ccx" => 2,
            other => {
                let k = other
                    .strip_prefix("ctrl(")
                    .and_then(|s| s.strip_suffix(")@x"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("unsupported gate `{other}`")))?;
                k
            }
        };
        let wires = args
            .split(',')
            .map(|a| parse_operand(a.trim(), &reg))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| err(format!("bad operands `{args}`")))?;
        if wires.len() != arity + 1 {
            return Err(err(format!(
                "expected {} operands, found {}",
                arity + 1,
                wires.len()
            )));
        }
        let circuit = circuit
            .append_gate(wires[..arity].iter().copied(), wires[arity])
            .map_err(|e| err(e.to_string()))?;
        register = Some((reg, circuit));
    }
    register.map(|(_, c)| c).ok_or_else(|| DocumentError::Qasm {
        line: text.lines().count(),
        message: "no qubit declaration".into(),
    })
}

/// Splits `ctrl(3) @ x q[0], q[1], ...` into (`ctrl(3)@x`, operands).
fn split_gate(stmt: &str) -> Option<(String, &str)> {
    let bracket = stmt.find('[')?;
    let args_start = stmt[..bracket].rfind(char::is_whitespace)? + 1;
    let op: String = stmt[..args_start]
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    Some((op, &stmt[args_start..]))
}

fn parse_operand(arg: &str, reg: &str) -> Option<usize> {
    let rest = arg.strip_prefix(reg)?.trim_start().strip_prefix('[')?;
    rest.strip_suffix(']')?.trim().parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDocument {
    pub controls: Vec<usize>,
    pub target: usize,
}

/// Layout metadata: the adder kind and width plus a role-name -> wire map
/// (`a1`, `b1`, `c1`/`g1`, `c0`, `cout`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub kind: AdderKind,
    pub n: usize,
    pub roles: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub format_version: String,
    pub name: String,
    pub width: usize,
    #[serde(default)]
    pub layout: Option<LayoutDocument>,
    pub gates: Vec<GateDocument>,
}

pub fn export_document(circuit: &Circuit) -> CircuitDocument {
    CircuitDocument {
        format_version: FORMAT_VERSION.to_owned(),
        name: circuit.name().to_owned(),
        width: circuit.width(),
        layout: circuit.layout().map(|l| LayoutDocument {
            kind: l.kind(),
            n: l.n(),
            roles: l
                .roles()
                .into_iter()
                .map(|(r, w)| (r.to_string(), w.0))
                .collect(),
        }),
        gates: circuit
            .gates()
            .iter()
            .map(|g| GateDocument {
                controls: g.controls().iter().map(|c| c.0).collect(),
                target: g.target().0,
            })
            .collect(),
    }
}

pub fn parse_document(doc: &CircuitDocument) -> Result<Circuit, DocumentError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(DocumentError::UnsupportedVersion(
            doc.format_version.clone(),
        ));
    }
    let layout = doc
        .layout
        .as_ref()
        .map(|l| {
            let roles = l
                .roles
                .iter()
                .map(|(name, &w)| {
                    Ok((
                        name.parse::<Role>().map_err(DocumentError::Layout)?,
                        WireIndex(w),
                    ))
                })
                .collect::<Result<BTreeMap<_, _>, DocumentError>>()?;
            RegisterLayout::from_roles(l.kind, l.n, &roles)
                .map_err(|e| DocumentError::Layout(e.to_string()))
        })
        .transpose()?;
    let mut circuit = Circuit::new(doc.width, doc.name.clone(), layout)?;
    for (index, g) in doc.gates.iter().enumerate() {
        let gate = Gate::new(g.controls.iter().copied(), g.target)
            .map_err(|source| DocumentError::Gate { index, source })?;
        circuit = circuit
            .push(gate)
            .map_err(|source| DocumentError::Gate { index, source })?;
    }
    Ok(circuit)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json(circuit: &Circuit) -> String {
    let mut s =
        serde_json::to_string_pretty(&export_document(circuit)).expect("document serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Circuit, DocumentError> {
    let doc: CircuitDocument = serde_json::from_str(text)?;
    parse_document(&doc)
}
