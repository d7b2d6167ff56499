//! Reversible-circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of multi-controlled NOT gates over a
//! fixed-width register of wires. Every gate in this family is self-inverse,
//! so reversing the gate list yields the functional inverse.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Position of a wire in a circuit's register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WireIndex(pub usize);

impl WireIndex {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for WireIndex {
    fn from(index: usize) -> Self {
        WireIndex(index)
    }
}

impl fmt::Display for WireIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("circuit width must be at least 1")]
    ZeroWidth,
    #[error("wire {wire} is out of range for width {width}")]
    WireOutOfRange { wire: usize, width: usize },
    #[error("duplicate control wire {0}")]
    DuplicateControl(usize),
    #[error("target wire {0} is also a control")]
    TargetInControls(usize),
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("invalid register layout: {0}")]
    InvalidLayout(String),
}

/// The three adder constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdderKind {
    /// Conventional quantum plain adder; resets its carry ancillas.
    Cqp,
    /// Modified plain adder; leaves ripple carries on the ancillas.
    Mqp,
    /// Carry look-ahead adder built from generate/propagate products.
    Qcla,
}

impl AdderKind {
    pub const ALL: [AdderKind; 3] = [AdderKind::Cqp, AdderKind::Mqp, AdderKind::Qcla];

    pub fn as_str(self) -> &'static str {
        match self {
            AdderKind::Cqp => "CQP",
            AdderKind::Mqp => "MQP",
            AdderKind::Qcla => "QCLA",
        }
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cqp" => Ok(AdderKind::Cqp),
            "mqp" => Ok(AdderKind::Mqp),
            "qcla" => Ok(AdderKind::Qcla),
            other => Err(format!("unknown adder kind `{other}`")),
        }
    }
}

/// One multi-controlled NOT: flips `target` iff every control is 1.
///
/// Controls are kept sorted ascending so that equal gates compare equal
/// regardless of the order they were written in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    controls: Vec<WireIndex>,
    target: WireIndex,
}

impl Gate {
    pub fn new<I, W>(controls: I, target: impl Into<WireIndex>) -> Result<Self, CircuitError>
    where
        I: IntoIterator<Item = W>,
        W: Into<WireIndex>,
    {
        let target = target.into();
        let mut controls: Vec<WireIndex> = controls.into_iter().map(Into::into).collect();
        controls.sort_unstable();
        if let Some(w) = controls.windows(2).find(|w| w[0] == w[1]) {
            return Err(CircuitError::DuplicateControl(w[0].0));
        }
        if controls.binary_search(&target).is_ok() {
            return Err(CircuitError::TargetInControls(target.0));
        }
        Ok(Gate { controls, target })
    }

    pub fn not(target: impl Into<WireIndex>) -> Self {
        Gate {
            controls: Vec::new(),
            target: target.into(),
        }
    }

    pub fn cnot(
        control: impl Into<WireIndex>,
        target: impl Into<WireIndex>,
    ) -> Result<Self, CircuitError> {
        Gate::new([control.into()], target)
    }

    pub fn ccnot(
        c1: impl Into<WireIndex>,
        c2: impl Into<WireIndex>,
        target: impl Into<WireIndex>,
    ) -> Result<Self, CircuitError> {
        Gate::new([c1.into(), c2.into()], target)
    }

    pub fn controls(&self) -> &[WireIndex] {
        &self.controls
    }

    pub fn target(&self) -> WireIndex {
        self.target
    }

    /// Number of controls: 1 for CNOT, 2 for CCNOT, k for C^kNOT.
    pub fn arity(&self) -> usize {
        self.controls.len()
    }

    /// All wires the gate touches, controls first.
    pub fn wires(&self) -> impl Iterator<Item = WireIndex> + '_ {
        self.controls
            .iter()
            .copied()
            .chain(std::iter::once(self.target))
    }

    pub fn max_wire(&self) -> usize {
        self.wires().map(WireIndex::index).max().unwrap_or(0)
    }

    fn check_width(&self, width: usize) -> Result<(), CircuitError> {
        match self.wires().find(|w| w.0 >= width) {
            Some(w) => Err(CircuitError::WireOutOfRange { wire: w.0, width }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}NOT{{", self.arity())?;
        for (i, c) in self.controls.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}->{}", self.target)
    }
}

/// A named wire role inside an adder register. Indices are 1-based bit
/// positions, bit 1 being least significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    A(usize),
    B(usize),
    /// Internal ripple carry C_i (CQP/MQP), 1 ≤ i ≤ n−1.
    C(usize),
    /// Generate ancilla g_i (QCLA), 1 ≤ i ≤ n−1.
    G(usize),
    C0,
    Cout,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::A(i) => write!(f, "a{i}"),
            Role::B(i) => write!(f, "b{i}"),
            Role::C(i) => write!(f, "c{i}"),
            Role::G(i) => write!(f, "g{i}"),
            Role::C0 => f.write_str("c0"),
            Role::Cout => f.write_str("cout"),
        }
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c0" => return Ok(Role::C0),
            "cout" => return Ok(Role::Cout),
            _ => {}
        }
        let bad = || format!("unknown role `{s}`");
        let (head, digits) = s.split_at(s.len().min(1));
        let i: usize = digits.parse().map_err(|_| bad())?;
        if i == 0 {
            return Err(bad());
        }
        match head {
            "a" => Ok(Role::A(i)),
            "b" => Ok(Role::B(i)),
            "c" => Ok(Role::C(i)),
            "g" => Ok(Role::G(i)),
            _ => Err(bad()),
        }
    }
}

/// Assignment of adder roles to wires.
///
/// Holds a_1..a_n, b_1..b_n, the n−1 internal ancillas (carries for the
/// plain adders, generate bits for QCLA), the carry-in c0 and the carry-out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    kind: AdderKind,
    n: usize,
    a: Vec<WireIndex>,
    b: Vec<WireIndex>,
    ancilla: Vec<WireIndex>,
    c0: WireIndex,
    cout: WireIndex,
}

impl RegisterLayout {
    /// Canonical layout used by the builders.
    ///
    /// CQP/MQP: c0 at 0, then (a_i, b_i, c_i) at 3i−2, 3i−1, 3i, with c_n
    /// acting as cout. QCLA: c0 at 0, (a_i, b_i) at 2i−1, 2i, g_1..g_{n−1}
    /// at 2n+1..3n−1, cout at 3n.
    pub fn canonical(kind: AdderKind, n: usize) -> Result<Self, CircuitError> {
        if n == 0 {
            return Err(CircuitError::InvalidLayout(
                "operand width n must be at least 1".into(),
            ));
        }
        let w = WireIndex;
        let layout = match kind {
            AdderKind::Cqp | AdderKind::Mqp => RegisterLayout {
                kind,
                n,
                a: (1..=n).map(|i| w(3 * i - 2)).collect(),
                b: (1..=n).map(|i| w(3 * i - 1)).collect(),
                ancilla: (1..n).map(|i| w(3 * i)).collect(),
                c0: w(0),
                cout: w(3 * n),
            },
            AdderKind::Qcla => RegisterLayout {
                kind,
                n,
                a: (1..=n).map(|i| w(2 * i - 1)).collect(),
                b: (1..=n).map(|i| w(2 * i)).collect(),
                ancilla: (1..n).map(|i| w(2 * n + i)).collect(),
                c0: w(0),
                cout: w(3 * n),
            },
        };
        Ok(layout)
    }

    /// Builds a layout from an explicit role map. The map must name every
    /// role of a `kind` adder of width `n` exactly once, on distinct wires.
    pub fn from_roles(
        kind: AdderKind,
        n: usize,
        roles: &BTreeMap<Role, WireIndex>,
    ) -> Result<Self, CircuitError> {
        if n == 0 {
            return Err(CircuitError::InvalidLayout(
                "operand width n must be at least 1".into(),
            ));
        }
        let expected = Self::expected_roles(kind, n);
        if roles.len() != expected.len() {
            return Err(CircuitError::InvalidLayout(format!(
                "expected {} roles for {kind} n={n}, found {}",
                expected.len(),
                roles.len()
            )));
        }
        let get = |role: Role| {
            roles
                .get(&role)
                .copied()
                .ok_or_else(|| CircuitError::InvalidLayout(format!("missing role {role}")))
        };
        let anc_role = |i| match kind {
            AdderKind::Qcla => Role::G(i),
            _ => Role::C(i),
        };
        let layout = RegisterLayout {
            kind,
            n,
            a: (1..=n).map(|i| get(Role::A(i))).collect::<Result<_, _>>()?,
            b: (1..=n).map(|i| get(Role::B(i))).collect::<Result<_, _>>()?,
            ancilla: (1..n).map(|i| get(anc_role(i))).collect::<Result<_, _>>()?,
            c0: get(Role::C0)?,
            cout: get(Role::Cout)?,
        };
        let mut seen = HashSet::new();
        for (role, wire) in layout.roles() {
            if !seen.insert(wire) {
                return Err(CircuitError::InvalidLayout(format!(
                    "wire {wire} assigned twice (again to {role})"
                )));
            }
        }
        Ok(layout)
    }

    fn expected_roles(kind: AdderKind, n: usize) -> Vec<Role> {
        let mut roles = vec![Role::C0];
        for i in 1..=n {
            roles.push(Role::A(i));
            roles.push(Role::B(i));
        }
        for i in 1..n {
            roles.push(match kind {
                AdderKind::Qcla => Role::G(i),
                _ => Role::C(i),
            });
        }
        roles.push(Role::Cout);
        roles
    }

    pub fn kind(&self) -> AdderKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of wires the layout occupies (always 3n+1).
    pub fn wire_count(&self) -> usize {
        3 * self.n + 1
    }

    pub fn a(&self, i: usize) -> WireIndex {
        self.a[i - 1]
    }

    pub fn b(&self, i: usize) -> WireIndex {
        self.b[i - 1]
    }

    /// Internal ancilla i (c_i or g_i), 1 ≤ i ≤ n−1.
    pub fn ancilla(&self, i: usize) -> WireIndex {
        self.ancilla[i - 1]
    }

    /// Carry wire C_i for 0 ≤ i ≤ n, on plain-adder layouts: c0, the
    /// internal carries, then cout.
    pub fn carry(&self, i: usize) -> WireIndex {
        match i {
            0 => self.c0,
            i if i == self.n => self.cout,
            i => self.ancilla(i),
        }
    }

    pub fn c0(&self) -> WireIndex {
        self.c0
    }

    pub fn cout(&self) -> WireIndex {
        self.cout
    }

    pub fn a_wires(&self) -> &[WireIndex] {
        &self.a
    }

    pub fn b_wires(&self) -> &[WireIndex] {
        &self.b
    }

    pub fn ancilla_wires(&self) -> &[WireIndex] {
        &self.ancilla
    }

    pub fn wire(&self, role: Role) -> Option<WireIndex> {
        let idx = |v: &[WireIndex], i: usize| i.checked_sub(1).and_then(|k| v.get(k).copied());
        match (role, self.kind) {
            (Role::A(i), _) => idx(&self.a, i),
            (Role::B(i), _) => idx(&self.b, i),
            (Role::C(i), AdderKind::Cqp | AdderKind::Mqp) => idx(&self.ancilla, i),
            (Role::G(i), AdderKind::Qcla) => idx(&self.ancilla, i),
            (Role::C0, _) => Some(self.c0),
            (Role::Cout, _) => Some(self.cout),
            _ => None,
        }
    }

    /// Every (role, wire) pair, in role order.
    pub fn roles(&self) -> Vec<(Role, WireIndex)> {
        Self::expected_roles(self.kind, self.n)
            .into_iter()
            .map(|r| (r, self.wire(r).expect("expected role present")))
            .collect()
    }

    pub fn max_wire(&self) -> usize {
        self.roles()
            .into_iter()
            .map(|(_, w)| w.0)
            .max()
            .unwrap_or(0)
    }
}

/// An ordered gate list over `width` wires.
///
/// Circuits are values: the mutating-looking operations consume `self` and
/// hand back the extended circuit, so a shared `&Circuit` never changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    name: String,
    width: usize,
    layout: Option<RegisterLayout>,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(
        width: usize,
        name: impl Into<String>,
        layout: Option<RegisterLayout>,
    ) -> Result<Self, CircuitError> {
        if width == 0 {
            return Err(CircuitError::ZeroWidth);
        }
        if let Some(layout) = &layout {
            let max = layout.max_wire();
            if max >= width {
                return Err(CircuitError::WireOutOfRange { wire: max, width });
            }
        }
        Ok(Circuit {
            name: name.into(),
            width,
            layout,
            gates: Vec::new(),
        })
    }

    /// Builds a circuit from an existing gate list, validating every gate.
    pub fn from_gates(
        width: usize,
        name: impl Into<String>,
        layout: Option<RegisterLayout>,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Self, CircuitError> {
        let mut circuit = Circuit::new(width, name, layout)?;
        for gate in gates {
            circuit = circuit.push(gate)?;
        }
        Ok(circuit)
    }

    /// Appends a gate given as raw controls and target.
    pub fn append_gate<I, W>(
        self,
        controls: I,
        target: impl Into<WireIndex>,
    ) -> Result<Self, CircuitError>
    where
        I: IntoIterator<Item = W>,
        W: Into<WireIndex>,
    {
        let gate = Gate::new(controls, target)?;
        self.push(gate)
    }

    /// Appends an already-validated gate after range-checking it.
    pub fn push(mut self, gate: Gate) -> Result<Self, CircuitError> {
        gate.check_width(self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(mut self, gates: impl IntoIterator<Item = Gate>) -> Result<Self, CircuitError> {
        for gate in gates {
            gate.check_width(self.width)?;
            self.gates.push(gate);
        }
        Ok(self)
    }

    /// The functional inverse: same gates in reverse order.
    pub fn reverse(&self) -> Circuit {
        Circuit {
            name: self.name.clone(),
            width: self.width,
            layout: self.layout.clone(),
            gates: self.gates.iter().rev().cloned().collect(),
        }
    }

    /// `self` followed by `second`. Keeps `self`'s name and layout, falling
    /// back to `second`'s layout when `self` has none.
    pub fn concat(&self, second: &Circuit) -> Result<Circuit, CircuitError> {
        if self.width != second.width {
            return Err(CircuitError::WidthMismatch {
                left: self.width,
                right: second.width,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend(second.gates.iter().cloned());
        Ok(Circuit {
            name: self.name.clone(),
            width: self.width,
            layout: self.layout.clone().or_else(|| second.layout.clone()),
            gates,
        })
    }

    /// Same gates on a wider register; used when appending ancilla wires.
    pub fn widen(&self, width: usize) -> Result<Circuit, CircuitError> {
        if width < self.width {
            return Err(CircuitError::WidthMismatch {
                left: self.width,
                right: width,
            });
        }
        Ok(Circuit {
            width,
            ..self.clone()
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layout(&self) -> Option<&RegisterLayout> {
        self.layout.as_ref()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_circuit_basics() {
        let c = Circuit::new(4, "t", None).unwrap();
        assert_eq!(c.width(), 4);
        assert!(c.is_empty());

        let layout = RegisterLayout::canonical(AdderKind::Cqp, 4).unwrap();
        let c = Circuit::new(13, "cqp4", Some(layout)).unwrap();
        assert_eq!(c.width(), 13);
        assert!(c.is_empty());

        assert_eq!(Circuit::new(0, "x", None), Err(CircuitError::ZeroWidth));
    }

    #[test]
    fn layout_must_fit_width() {
        let layout = RegisterLayout::canonical(AdderKind::Qcla, 4).unwrap();
        assert!(matches!(
            Circuit::new(12, "short", Some(layout)),
            Err(CircuitError::WireOutOfRange {
                wire: 12,
                width: 12
            })
        ));
    }

    #[test]
    fn append_gate_validation() {
        let c = Circuit::new(4, "t", None).unwrap();
        let c = c.append_gate([1usize, 2], 3usize).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.gates()[0].arity(), 2);

        let base = Circuit::new(4, "t", None).unwrap();
        assert_eq!(
            base.clone().append_gate([1usize, 1], 2usize),
            Err(CircuitError::DuplicateControl(1))
        );
        assert_eq!(
            base.clone().append_gate([0usize], 0usize),
            Err(CircuitError::TargetInControls(0))
        );
        assert_eq!(
            base.append_gate([0usize], 4usize),
            Err(CircuitError::WireOutOfRange { wire: 4, width: 4 })
        );
    }

    #[test]
    fn controls_are_canonicalised() {
        let g1 = Gate::new([3usize, 1, 2], 0usize).unwrap();
        let g2 = Gate::new([1usize, 2, 3], 0usize).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.controls(), &[WireIndex(1), WireIndex(2), WireIndex(3)]);
        assert_eq!(g1.to_string(), "C3NOT{1,2,3}->0");
    }

    #[test]
    fn zero_control_gate_allowed() {
        let c = Circuit::new(2, "x", None)
            .unwrap()
            .push(Gate::not(1usize))
            .unwrap();
        assert_eq!(c.gates()[0].arity(), 0);
    }

    #[test]
    fn reverse_and_concat() {
        let empty = Circuit::new(3, "e", None).unwrap();
        assert_eq!(empty.reverse(), empty);

        let c = Circuit::new(4, "c", None)
            .unwrap()
            .append_gate([0usize], 1usize)
            .unwrap()
            .append_gate([1usize, 2], 3usize)
            .unwrap()
            .append_gate(Vec::<usize>::new(), 0usize)
            .unwrap();
        let r = c.reverse();
        assert_eq!(r.gates()[0], c.gates()[2]);
        assert_eq!(r.gates()[2], c.gates()[0]);
        assert_eq!(r.reverse(), c);

        assert_eq!(c.concat(&Circuit::new(4, "z", None).unwrap()).unwrap(), c);
        let cc = c.concat(&r).unwrap();
        assert_eq!(cc.len(), 6);

        let five = Circuit::new(5, "f", None).unwrap();
        assert_eq!(
            c.concat(&five),
            Err(CircuitError::WidthMismatch { left: 4, right: 5 })
        );
    }

    #[test]
    fn canonical_layouts_cover_3n_plus_1_wires() {
        for kind in AdderKind::ALL {
            for n in 1..=16 {
                let layout = RegisterLayout::canonical(kind, n).unwrap();
                let mut wires: Vec<usize> = layout.roles().into_iter().map(|(_, w)| w.0).collect();
                wires.sort_unstable();
                assert_eq!(wires, (0..3 * n + 1).collect::<Vec<_>>(), "{kind} n={n}");
            }
        }
        assert!(RegisterLayout::canonical(AdderKind::Mqp, 0).is_err());
    }

    #[test]
    fn plain_layout_carries() {
        let l = RegisterLayout::canonical(AdderKind::Cqp, 4).unwrap();
        assert_eq!(l.carry(0), WireIndex(0));
        assert_eq!(l.carry(2), WireIndex(6));
        assert_eq!(l.carry(4), l.cout());
        assert_eq!(l.cout(), WireIndex(12));
        assert_eq!(l.wire(Role::G(1)), None);
    }

    #[test]
    fn layout_from_roles_round_trip_and_rejects_collisions() {
        let l = RegisterLayout::canonical(AdderKind::Qcla, 3).unwrap();
        let mut map: BTreeMap<Role, WireIndex> = l.roles().into_iter().collect();
        assert_eq!(
            RegisterLayout::from_roles(AdderKind::Qcla, 3, &map).unwrap(),
            l
        );
        map.insert(Role::G(1), WireIndex(0));
        assert!(RegisterLayout::from_roles(AdderKind::Qcla, 3, &map).is_err());
        map.remove(&Role::G(1));
        assert!(RegisterLayout::from_roles(AdderKind::Qcla, 3, &map).is_err());
    }

    #[test]
    fn role_parse_display() {
        for s in ["a1", "b12", "c3", "g2", "c0", "cout"] {
            assert_eq!(s.parse::<Role>().unwrap().to_string(), s);
        }
        for s in ["", "x1", "a0", "a", "b-1", "coutt"] {
            assert!(s.parse::<Role>().is_err(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn malformed_gates_rejected(
            width in 1usize..12,
            controls in proptest::collection::vec(0usize..16, 0..6),
            target in 0usize..16,
        ) {
            let mut sorted = controls.clone();
            sorted.sort_unstable();
            let has_dup = sorted.windows(2).any(|w| w[0] == w[1]);
            let target_in = controls.contains(&target);
            let out_of_range = controls.iter().chain([&target]).any(|&w| w >= width);
            let result = Circuit::new(width, "p", None).unwrap().append_gate(controls, target);
            if has_dup || target_in || out_of_range {
                prop_assert!(result.is_err());
            } else {
                let c = result.unwrap();
                let g = &c.gates()[0];
                prop_assert!(g.controls().windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!g.controls().contains(&g.target()));
                prop_assert!(g.max_wire() < width);
            }
        }
    }
}
