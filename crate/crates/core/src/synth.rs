//! Adder synthesis.
//!
//! Carry and sum gates for the plain adders, AND/XOR gates and the C_n / S_i
//! look-ahead modules for QCLA, and the three full adder builders over the
//! canonical layouts of [`RegisterLayout::canonical`].

use std::collections::HashSet;

pub use crate::circuit::AdderKind;
use crate::circuit::{Circuit, CircuitError, Gate, RegisterLayout, WireIndex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("operand width n must be at least 1")]
    ZeroWidth,
    #[error("wire {0} used more than once")]
    DuplicateWire(usize),
    #[error("expected a {expected} layout, got {found}")]
    LayoutKind {
        expected: AdderKind,
        found: AdderKind,
    },
    #[error("layout is for n={layout}, module requested n={requested}")]
    LayoutWidth { layout: usize, requested: usize },
    #[error("S module index {i} out of range 1..={n}")]
    ModuleIndex { i: usize, n: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn distinct(wires: &[WireIndex]) -> Result<(), SynthError> {
    let mut seen = HashSet::with_capacity(wires.len());
    for w in wires {
        if !seen.insert(*w) {
            return Err(SynthError::DuplicateWire(w.0));
        }
    }
    Ok(())
}

/// Carry gate: `c_out ^= a·b ^ (a^b)·c_in`, `b <- a^b`.
pub fn carry_gate(
    c_in: WireIndex,
    a: WireIndex,
    b: WireIndex,
    c_out: WireIndex,
) -> Result<Vec<Gate>, SynthError> {
    distinct(&[c_in, a, b, c_out])?;
    Ok(vec![
        Gate::ccnot(a, b, c_out)?,
        Gate::cnot(a, b)?,
        Gate::ccnot(c_in, b, c_out)?,
    ])
}

/// Inverse carry gate (the carry gate's gates in reverse order).
pub fn inverse_carry_gate(
    c_in: WireIndex,
    a: WireIndex,
    b: WireIndex,
    c_out: WireIndex,
) -> Result<Vec<Gate>, SynthError> {
    let mut gates = carry_gate(c_in, a, b, c_out)?;
    gates.reverse();
    Ok(gates)
}

/// Sum gate: `b <- a ^ b ^ c_in`.
pub fn sum_gate(c_in: WireIndex, a: WireIndex, b: WireIndex) -> Result<Vec<Gate>, SynthError> {
    distinct(&[c_in, a, b])?;
    Ok(vec![Gate::cnot(a, b)?, Gate::cnot(c_in, b)?])
}

/// AND gate: with `anc` clear, leaves the generate bit `a·b` on it.
pub fn and_gate(a: WireIndex, b: WireIndex, anc: WireIndex) -> Result<Vec<Gate>, SynthError> {
    distinct(&[a, b, anc])?;
    Ok(vec![Gate::ccnot(a, b, anc)?])
}

/// XOR gate: leaves the propagate bit `a^b` on `b`.
pub fn xor_gate(a: WireIndex, b: WireIndex) -> Result<Vec<Gate>, SynthError> {
    distinct(&[a, b])?;
    Ok(vec![Gate::cnot(a, b)?])
}

fn expect_qcla(n: usize, layout: &RegisterLayout) -> Result<(), SynthError> {
    if layout.kind() != AdderKind::Qcla {
        return Err(SynthError::LayoutKind {
            expected: AdderKind::Qcla,
            found: layout.kind(),
        });
    }
    if layout.n() != n {
        return Err(SynthError::LayoutWidth {
            layout: layout.n(),
            requested: n,
        });
    }
    Ok(())
}

/// One look-ahead term targeting `target`: the product of `head` with the
/// propagate bits p_lo..=p_hi (held on b-wires).
fn lookahead_term(
    layout: &RegisterLayout,
    head: WireIndex,
    lo: usize,
    hi: usize,
    target: WireIndex,
) -> Result<Gate, SynthError> {
    let controls = std::iter::once(head).chain((lo..=hi).map(|k| layout.b(k)));
    Ok(Gate::new(controls, target)?)
}

/// C_n module: accumulates the look-ahead expansion of C_n onto cout.
///
/// Expects p_k on b(k), g_k on g(k), and g_n already on cout. Emits
/// g_k·p_{k+1}···p_n for k = n−1 down to 1, then p_1···p_n·c0.
pub fn c_module(n: usize, layout: &RegisterLayout) -> Result<Vec<Gate>, SynthError> {
    expect_qcla(n, layout)?;
    let cout = layout.cout();
    let mut gates = Vec::with_capacity(n);
    for k in (1..n).rev() {
        gates.push(lookahead_term(layout, layout.ancilla(k), k + 1, n, cout)?);
    }
    gates.push(lookahead_term(layout, layout.c0(), 1, n, cout)?);
    Ok(gates)
}

/// S_i module: turns p_i on b(i) into S_i = p_i ^ C_{i−1}.
///
/// Emits g_k·p_{k+1}···p_{i−1} for k = i−1 down to 1, then
/// p_1···p_{i−1}·c0, all targeting b(i).
pub fn s_module(i: usize, layout: &RegisterLayout) -> Result<Vec<Gate>, SynthError> {
    expect_qcla(layout.n(), layout)?;
    let n = layout.n();
    if i == 0 || i > n {
        return Err(SynthError::ModuleIndex { i, n });
    }
    let target = layout.b(i);
    let mut gates = Vec::with_capacity(i);
    for k in (1..i).rev() {
        gates.push(lookahead_term(
            layout,
            layout.ancilla(k),
            k + 1,
            i - 1,
            target,
        )?);
    }
    gates.push(lookahead_term(layout, layout.c0(), 1, i - 1, target)?);
    Ok(gates)
}

fn empty_adder(kind: AdderKind, n: usize) -> Result<(Circuit, RegisterLayout), SynthError> {
    if n == 0 {
        return Err(SynthError::ZeroWidth);
    }
    let layout = RegisterLayout::canonical(kind, n)?;
    let name = format!("{}{n}", kind.as_str().to_ascii_lowercase());
    let circuit = Circuit::new(layout.wire_count(), name, Some(layout.clone()))?;
    Ok((circuit, layout))
}

/// Conventional plain adder: 8n−2 gates, carries reset to zero.
pub fn build_cqp(n: usize) -> Result<Circuit, SynthError> {
    let (mut circuit, l) = empty_adder(AdderKind::Cqp, n)?;
    for i in 1..=n {
        circuit = circuit.extend(carry_gate(l.carry(i - 1), l.a(i), l.b(i), l.carry(i))?)?;
    }
    circuit = circuit.push(Gate::cnot(l.a(n), l.b(n))?)?;
    circuit = circuit.extend(sum_gate(l.carry(n - 1), l.a(n), l.b(n))?)?;
    for i in (1..n).rev() {
        circuit = circuit.extend(inverse_carry_gate(
            l.carry(i - 1),
            l.a(i),
            l.b(i),
            l.carry(i),
        )?)?;
        circuit = circuit.extend(sum_gate(l.carry(i - 1), l.a(i), l.b(i))?)?;
    }
    Ok(circuit)
}

/// Modified plain adder: 4n gates, ripple carries left on the ancillas.
pub fn build_mqp(n: usize) -> Result<Circuit, SynthError> {
    let (mut circuit, l) = empty_adder(AdderKind::Mqp, n)?;
    for i in 1..=n {
        circuit = circuit.extend(carry_gate(l.carry(i - 1), l.a(i), l.b(i), l.carry(i))?)?;
    }
    for i in 1..=n {
        circuit = circuit.push(Gate::cnot(l.carry(i - 1), l.b(i))?)?;
    }
    Ok(circuit)
}

/// Carry look-ahead adder: 3n + n(n+1)/2 gates.
///
/// The S modules run after the C_n module and in descending order, since
/// each module reads p_j from lower b-wires that S_j later overwrites.
pub fn build_qcla(n: usize) -> Result<Circuit, SynthError> {
    let (mut circuit, l) = empty_adder(AdderKind::Qcla, n)?;
    for i in 1..n {
        circuit = circuit.extend(and_gate(l.a(i), l.b(i), l.ancilla(i))?)?;
    }
    // g_n goes straight onto cout
    circuit = circuit.extend(and_gate(l.a(n), l.b(n), l.cout())?)?;
    for i in 1..=n {
        circuit = circuit.extend(xor_gate(l.a(i), l.b(i))?)?;
    }
    circuit = circuit.extend(c_module(n, &l)?)?;
    for i in (1..=n).rev() {
        circuit = circuit.extend(s_module(i, &l)?)?;
    }
    Ok(circuit)
}

pub fn build(kind: AdderKind, n: usize) -> Result<Circuit, SynthError> {
    match kind {
        AdderKind::Cqp => build_cqp(n),
        AdderKind::Mqp => build_mqp(n),
        AdderKind::Qcla => build_qcla(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, BasisState};

    fn w(i: usize) -> WireIndex {
        WireIndex(i)
    }

    /// Runs `gates` on a register whose wire i holds `bits[i]`.
    fn eval(gates: Vec<Gate>, bits: &[u8]) -> Vec<u8> {
        let c = Circuit::from_gates(bits.len(), "t", None, gates).unwrap();
        let input = BasisState::from_bits(bits.iter().map(|&b| b == 1)).unwrap();
        let out = run(&c, &input).unwrap();
        (0..bits.len()).map(|i| out.bit(i) as u8).collect()
    }

    #[test]
    fn carry_gate_structure_and_truth_table() {
        let g = carry_gate(w(0), w(1), w(2), w(3)).unwrap();
        assert_eq!(
            g,
            vec![
                Gate::ccnot(1usize, 2usize, 3usize).unwrap(),
                Gate::cnot(1usize, 2usize).unwrap(),
                Gate::ccnot(0usize, 2usize, 3usize).unwrap(),
            ]
        );
        // independent oracle: c_out ^= ab ^ (a^b)c_in, b <- a^b
        for x in 0..16u8 {
            let (ci, a, b, co) = (x & 1, x >> 1 & 1, x >> 2 & 1, x >> 3 & 1);
            let expect = vec![ci, a, a ^ b, co ^ (a & b) ^ ((a ^ b) & ci)];
            assert_eq!(eval(g.clone(), &[ci, a, b, co]), expect);
        }
        assert_eq!(eval(g.clone(), &[0, 0, 0, 0]), vec![0, 0, 0, 0]);
        assert_eq!(eval(g.clone(), &[1, 1, 0, 0]), vec![1, 1, 1, 1]);
        assert_eq!(eval(g, &[0, 1, 1, 0]), vec![0, 1, 0, 1]);
        assert_eq!(
            carry_gate(w(0), w(1), w(1), w(3)),
            Err(SynthError::DuplicateWire(1))
        );
    }

    #[test]
    fn inverse_carry_is_reversed_carry() {
        let c = carry_gate(w(0), w(1), w(2), w(3)).unwrap();
        let inv = inverse_carry_gate(w(0), w(1), w(2), w(3)).unwrap();
        let circuit = Circuit::from_gates(4, "c", None, c).unwrap();
        assert_eq!(circuit.reverse().gates(), inv.as_slice());
    }

    #[test]
    fn sum_gate_truth_table() {
        let g = sum_gate(w(0), w(1), w(2)).unwrap();
        assert_eq!(g.len(), 2);
        for x in 0..8u8 {
            let (ci, a, b) = (x & 1, x >> 1 & 1, x >> 2 & 1);
            assert_eq!(eval(g.clone(), &[ci, a, b]), vec![ci, a, a ^ b ^ ci]);
        }
        assert_eq!(eval(g.clone(), &[1, 1, 0]), vec![1, 1, 0]);
        assert_eq!(eval(g, &[0, 1, 1]), vec![0, 1, 0]);
        assert!(sum_gate(w(2), w(1), w(2)).is_err());
    }

    #[test]
    fn and_xor_gates() {
        let and = and_gate(w(0), w(1), w(2)).unwrap();
        assert_eq!(eval(and.clone(), &[1, 1, 0])[2], 1);
        assert_eq!(eval(and.clone(), &[1, 0, 0])[2], 0);
        assert_eq!(eval(and, &[0, 0, 0])[2], 0);
        let xor = xor_gate(w(0), w(1)).unwrap();
        assert_eq!(eval(xor.clone(), &[1, 1])[1], 0);
        assert_eq!(eval(xor.clone(), &[1, 0])[1], 1);
        assert_eq!(eval(xor, &[0, 0])[1], 0);
        assert!(and_gate(w(0), w(0), w(2)).is_err());
        assert!(xor_gate(w(3), w(3)).is_err());
    }

    #[test]
    fn c_module_inventory() {
        let l = RegisterLayout::canonical(AdderKind::Qcla, 4).unwrap();
        let gates = c_module(4, &l).unwrap();
        let arities: Vec<usize> = gates.iter().map(Gate::arity).collect();
        assert_eq!(arities, vec![2, 3, 4, 5]);
        assert!(gates.iter().all(|g| g.target() == l.cout()));
        // term structure: g_k p_{k+1..n}, then c0 p_1..n
        for (idx, k) in (1..4).rev().enumerate() {
            let mut expect: Vec<WireIndex> = vec![l.ancilla(k)];
            expect.extend((k + 1..=4).map(|j| l.b(j)));
            expect.sort();
            assert_eq!(gates[idx].controls(), expect.as_slice());
        }
        let mut last: Vec<WireIndex> = vec![l.c0()];
        last.extend((1..=4).map(|j| l.b(j)));
        last.sort();
        assert_eq!(gates[3].controls(), last.as_slice());

        let l1 = RegisterLayout::canonical(AdderKind::Qcla, 1).unwrap();
        assert_eq!(
            c_module(1, &l1).unwrap(),
            vec![Gate::ccnot(l1.c0(), l1.b(1), l1.cout()).unwrap()]
        );

        let plain = RegisterLayout::canonical(AdderKind::Mqp, 4).unwrap();
        assert!(matches!(
            c_module(4, &plain),
            Err(SynthError::LayoutKind { .. })
        ));
        assert!(matches!(
            c_module(3, &l),
            Err(SynthError::LayoutWidth { .. })
        ));
    }

    #[test]
    fn c_module_fires_only_carry_in_term() {
        // all p=1, g=0, c0=1, cout (g_n) = 0: only the c0 term flips cout
        let l = RegisterLayout::canonical(AdderKind::Qcla, 4).unwrap();
        let mut bits = vec![0u8; 13];
        bits[l.c0().0] = 1;
        for i in 1..=4 {
            bits[l.b(i).0] = 1;
        }
        let out = eval(c_module(4, &l).unwrap(), &bits);
        assert_eq!(out[l.cout().0], 1);
    }

    #[test]
    fn s_module_inventory() {
        let l = RegisterLayout::canonical(AdderKind::Qcla, 4).unwrap();
        assert_eq!(
            s_module(1, &l).unwrap(),
            vec![Gate::cnot(l.c0(), l.b(1)).unwrap()]
        );
        assert_eq!(
            s_module(2, &l).unwrap(),
            vec![
                Gate::cnot(l.ancilla(1), l.b(2)).unwrap(),
                Gate::ccnot(l.c0(), l.b(1), l.b(2)).unwrap(),
            ]
        );
        let s4 = s_module(4, &l).unwrap();
        assert_eq!(
            s4.iter().map(Gate::arity).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        assert!(s4.iter().all(|g| g.target() == l.b(4)));
        // g3 ; g2 p3 ; g1 p2 p3 ; c0 p1 p2 p3
        let expect = [
            vec![l.ancilla(3)],
            vec![l.ancilla(2), l.b(3)],
            vec![l.ancilla(1), l.b(2), l.b(3)],
            vec![l.c0(), l.b(1), l.b(2), l.b(3)],
        ];
        for (g, mut e) in s4.iter().zip(expect) {
            e.sort();
            assert_eq!(g.controls(), e.as_slice());
        }
        assert_eq!(s_module(0, &l), Err(SynthError::ModuleIndex { i: 0, n: 4 }));
        assert_eq!(s_module(5, &l), Err(SynthError::ModuleIndex { i: 5, n: 4 }));
    }

    #[test]
    fn builder_sizes() {
        assert_eq!(build_cqp(1).unwrap().len(), 6);
        assert_eq!(build_cqp(1).unwrap().width(), 4);
        assert_eq!(build_cqp(4).unwrap().len(), 30);
        assert_eq!(build_cqp(4).unwrap().width(), 13);
        assert_eq!(build_mqp(4).unwrap().len(), 16);
        assert_eq!(build_mqp(1).unwrap().len(), 4);
        assert_eq!(build_qcla(4).unwrap().len(), 22);
        assert_eq!(build_qcla(1).unwrap().len(), 4);
        assert_eq!(build_qcla(3).unwrap().len(), 15);
        for kind in AdderKind::ALL {
            assert_eq!(build(kind, 0), Err(SynthError::ZeroWidth));
        }
    }

    #[test]
    fn closed_form_counts_and_widths() {
        for n in 1..=16 {
            assert_eq!(build_cqp(n).unwrap().len(), 8 * n - 2);
            assert_eq!(build_mqp(n).unwrap().len(), 4 * n);
            assert_eq!(build_qcla(n).unwrap().len(), 4 * n + n * (n - 1) / 2);
            for kind in AdderKind::ALL {
                assert_eq!(build(kind, n).unwrap().width(), 3 * n + 1);
            }
        }
    }

    #[test]
    fn cqp_zero_input_stays_zero() {
        let c = build_cqp(2).unwrap();
        let out = run(&c, &BasisState::zero(c.width()).unwrap()).unwrap();
        assert_eq!(out.word(), 0);
    }
}
