//! Gate counts, processing stages and the C^kNOT decomposition pass.
//!
//! Two stage measures are reported side by side: the strict ASAP depth of
//! the emitted gate order (two gates conflict iff their wire sets meet), and
//! the closed-form stage counts of the published comparison table. They
//! agree for the plain adders; for QCLA the closed form only counts the
//! C_n-module path and is smaller than any valid schedule of the circuit.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::circuit::{AdderKind, Circuit, CircuitError, Gate, WireIndex};
use crate::synth::{self, SynthError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("max_arity must be at least 2, got {0}")]
    MaxArity(usize),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Gates grouped into sequential stages of wire-disjoint gates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Gate indices (into the scheduled circuit) per stage, ascending.
    pub stages: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Checks that the schedule is a valid staging of `circuit`: each gate
    /// appears once, stages are wire-disjoint, and gates sharing a wire keep
    /// their program order.
    pub fn validate(&self, circuit: &Circuit) -> Result<(), String> {
        let gates = circuit.gates();
        let mut stage_of = vec![None; gates.len()];
        for (s, stage) in self.stages.iter().enumerate() {
            let mut used = vec![false; circuit.width()];
            for &g in stage {
                let slot = stage_of
                    .get_mut(g)
                    .ok_or_else(|| format!("gate index {g} out of range"))?;
                if slot.is_some() {
                    return Err(format!("gate {g} scheduled twice"));
                }
                *slot = Some(s);
                for w in gates[g].wires() {
                    if std::mem::replace(&mut used[w.0], true) {
                        return Err(format!("stage {s} uses wire {w} twice"));
                    }
                }
            }
        }
        let stage_of: Vec<usize> = stage_of
            .into_iter()
            .enumerate()
            .map(|(g, s)| s.ok_or_else(|| format!("gate {g} not scheduled")))
            .collect::<Result<_, _>>()?;
        let mut last: Vec<Option<usize>> = vec![None; circuit.width()];
        for (g, gate) in gates.iter().enumerate() {
            for w in gate.wires() {
                if let Some(prev) = last[w.0] {
                    if stage_of[prev] >= stage_of[g] {
                        return Err(format!("gates {prev} and {g} share wire {w} out of order"));
                    }
                }
                last[w.0] = Some(g);
            }
        }
        Ok(())
    }

    /// Re-emits the circuit's gates stage by stage.
    pub fn flatten(&self, circuit: &Circuit) -> Result<Circuit, CircuitError> {
        let gates = self
            .stages
            .iter()
            .flatten()
            .map(|&g| circuit.gates()[g].clone());
        Circuit::new(circuit.width(), circuit.name(), circuit.layout().cloned())?.extend(gates)
    }
}

/// Places each gate one stage after the latest prior gate on any of its
/// wires.
pub fn asap_schedule(circuit: &Circuit) -> Schedule {
    let mut ready = vec![0usize; circuit.width()];
    let mut stages: Vec<Vec<usize>> = Vec::new();
    for (g, gate) in circuit.gates().iter().enumerate() {
        let stage = gate.wires().map(|w| ready[w.0]).max().unwrap_or(0);
        for w in gate.wires() {
            ready[w.0] = stage + 1;
        }
        if stage == stages.len() {
            stages.push(Vec::new());
        }
        stages[stage].push(g);
    }
    Schedule { stages }
}

/// Stage counts from the published table: 6n (CQP), n+3 (MQP), n+2 (QCLA).
pub fn paper_stage_count(kind: AdderKind, n: usize) -> usize {
    match kind {
        AdderKind::Cqp => 6 * n,
        AdderKind::Mqp => n + 3,
        AdderKind::Qcla => n + 2,
    }
}

/// Gate counts: 8n−2 (CQP), 4n (MQP), 4n + Σ_{i<n}(n−i) (QCLA).
pub fn closed_form_gates(kind: AdderKind, n: usize) -> usize {
    match kind {
        AdderKind::Cqp => (8 * n).saturating_sub(2),
        AdderKind::Mqp => 4 * n,
        AdderKind::Qcla => 4 * n + (1..n).map(|i| n - i).sum::<usize>(),
    }
}

pub fn arity_histogram(circuit: &Circuit) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for gate in circuit.gates() {
        *hist.entry(gate.arity()).or_insert(0) += 1;
    }
    hist
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsReport {
    pub kind: AdderKind,
    pub n: usize,
    pub gate_count: usize,
    /// Control count -> number of gates.
    pub arity_histogram: BTreeMap<usize, usize>,
    pub asap_depth: usize,
    pub paper_stages: usize,
    pub closed_form_gates: usize,
    pub closed_form_stages: usize,
}

impl MetricsReport {
    pub fn gates_match_closed_form(&self) -> bool {
        self.gate_count == self.closed_form_gates
    }
}

pub fn metrics(kind: AdderKind, n: usize) -> Result<MetricsReport, MetricsError> {
    let circuit = synth::build(kind, n)?;
    Ok(MetricsReport {
        kind,
        n,
        gate_count: circuit.len(),
        arity_histogram: arity_histogram(&circuit),
        asap_depth: asap_schedule(&circuit).depth(),
        paper_stages: paper_stage_count(kind, n),
        closed_form_gates: closed_form_gates(kind, n),
        closed_form_stages: paper_stage_count(kind, n),
    })
}

/// One row of the comparison table, plus strict ASAP depths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub qcla_stages: usize,
    pub qcla_gates: usize,
    pub cqp_stages: usize,
    pub cqp_gates: usize,
    pub mqp_stages: usize,
    pub mqp_gates: usize,
    pub qcla_asap_depth: usize,
    pub cqp_asap_depth: usize,
    pub mqp_asap_depth: usize,
    /// Built gate counts equal the closed forms for all three adders.
    pub gates_match: bool,
}

impl Table1Row {
    /// The seven published columns.
    pub fn paper_columns(&self) -> [usize; 7] {
        [
            self.n,
            self.qcla_stages,
            self.qcla_gates,
            self.cqp_stages,
            self.cqp_gates,
            self.mqp_stages,
            self.mqp_gates,
        ]
    }
}

pub fn table1(n_max: usize) -> Result<Vec<Table1Row>, MetricsError> {
    (1..=n_max)
        .map(|n| {
            let q = metrics(AdderKind::Qcla, n)?;
            let c = metrics(AdderKind::Cqp, n)?;
            let m = metrics(AdderKind::Mqp, n)?;
            Ok(Table1Row {
                n,
                qcla_stages: q.paper_stages,
                qcla_gates: q.gate_count,
                cqp_stages: c.paper_stages,
                cqp_gates: c.gate_count,
                mqp_stages: m.paper_stages,
                mqp_gates: m.gate_count,
                qcla_asap_depth: q.asap_depth,
                cqp_asap_depth: c.asap_depth,
                mqp_asap_depth: m.asap_depth,
                gates_match: [&q, &c, &m].iter().all(|r| r.gates_match_closed_form()),
            })
        })
        .collect()
}

/// Lowers every gate with more than `max_arity` controls to CCNOTs.
///
/// A k-control gate becomes a Toffoli ladder over k−2 clean ancillas
/// appended after the existing wires: the conjunction chain is computed,
/// the target is flipped from the last link, and the chain is uncomputed,
/// 2(k−2)+1 gates in all. Ancillas are shared between gates and always
/// return to zero. Layout and wire numbering of the original are kept.
pub fn decompose_mcx(circuit: &Circuit, max_arity: usize) -> Result<Circuit, MetricsError> {
    if max_arity < 2 {
        return Err(MetricsError::MaxArity(max_arity));
    }
    let base = circuit.width();
    let needed = circuit
        .gates()
        .iter()
        .filter(|g| g.arity() > max_arity)
        .map(|g| g.arity() - 2)
        .max()
        .unwrap_or(0);
    let anc = |j: usize| WireIndex(base + j);
    let mut gates = Vec::with_capacity(circuit.len());
    for gate in circuit.gates() {
        if gate.arity() <= max_arity {
            gates.push(gate.clone());
            continue;
        }
        let c = gate.controls();
        let k = c.len();
        let mut ladder = Vec::with_capacity(k - 2);
        ladder.push(Gate::ccnot(c[0], c[1], anc(0))?);
        for j in 1..k - 2 {
            ladder.push(Gate::ccnot(anc(j - 1), c[j + 1], anc(j))?);
        }
        gates.extend(ladder.iter().cloned());
        gates.push(Gate::ccnot(anc(k - 3), c[k - 1], gate.target())?);
        gates.extend(ladder.into_iter().rev());
    }
    Ok(Circuit::new(base + needed, circuit.name(), circuit.layout().cloned())?.extend(gates)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{permutation_check, run, BasisState, CompiledCircuit};
    use proptest::prelude::*;

    #[test]
    fn paper_depths_for_four_bits() {
        assert_eq!(asap_schedule(&synth::build_cqp(4).unwrap()).depth(), 24);
        assert_eq!(asap_schedule(&synth::build_mqp(4).unwrap()).depth(), 7);
        assert_eq!(asap_schedule(&synth::build_qcla(4).unwrap()).depth(), 16);
        assert_eq!(asap_schedule(&synth::build_qcla(1).unwrap()).depth(), 4);
    }

    #[test]
    fn single_and_empty() {
        let one = Circuit::new(3, "g", None)
            .unwrap()
            .append_gate([0usize], 2usize)
            .unwrap();
        assert_eq!(asap_schedule(&one).depth(), 1);
        let empty = Circuit::new(3, "e", None).unwrap();
        assert_eq!(asap_schedule(&empty).depth(), 0);
    }

    #[test]
    fn stage_and_gate_formulas() {
        assert_eq!(paper_stage_count(AdderKind::Qcla, 4), 6);
        assert_eq!(paper_stage_count(AdderKind::Cqp, 1), 6);
        assert_eq!(paper_stage_count(AdderKind::Mqp, 2), 5);
        assert_eq!(closed_form_gates(AdderKind::Qcla, 2), 9);
        assert_eq!(closed_form_gates(AdderKind::Cqp, 3), 22);
        assert_eq!(closed_form_gates(AdderKind::Mqp, 4), 16);
        for n in 1..=16 {
            assert_eq!(
                closed_form_gates(AdderKind::Qcla, n),
                4 * n + n * (n - 1) / 2
            );
        }
    }

    #[test]
    fn metrics_examples() {
        let r = metrics(AdderKind::Cqp, 4).unwrap();
        assert_eq!((r.gate_count, r.asap_depth, r.paper_stages), (30, 24, 24));
        let r = metrics(AdderKind::Mqp, 1).unwrap();
        assert_eq!((r.gate_count, r.asap_depth, r.paper_stages), (4, 4, 4));
        let r = metrics(AdderKind::Qcla, 4).unwrap();
        assert_eq!((r.gate_count, r.paper_stages), (22, 6));
        // 4 XOR + 4 single-control S terms; 4 AND + C/S two-control terms; ...
        let expect: BTreeMap<usize, usize> = [(1, 8), (2, 8), (3, 3), (4, 2), (5, 1)].into();
        assert_eq!(r.arity_histogram, expect);
        for kind in AdderKind::ALL {
            let r = metrics(kind, 5).unwrap();
            assert_eq!(r.gate_count, r.arity_histogram.values().sum::<usize>());
        }
    }

    #[test]
    fn table_rows() {
        let rows = table1(4).unwrap();
        assert_eq!(rows[0].paper_columns(), [1, 3, 4, 6, 6, 4, 4]);
        assert_eq!(rows[1].paper_columns(), [2, 4, 9, 12, 14, 5, 8]);
        assert_eq!(rows[3].paper_columns(), [4, 6, 22, 24, 30, 7, 16]);
        assert!(rows.iter().all(|r| r.gates_match));
    }

    #[test]
    fn schedules_validate_and_flatten() {
        for kind in AdderKind::ALL {
            for n in 1..=4 {
                let c = synth::build(kind, n).unwrap();
                let s = asap_schedule(&c);
                s.validate(&c).unwrap();
                let flat = s.flatten(&c).unwrap();
                let (x, y) = (
                    CompiledCircuit::new(&c).unwrap(),
                    CompiledCircuit::new(&flat).unwrap(),
                );
                for w in 0..1u64 << c.width() {
                    assert_eq!(x.run_word(w), y.run_word(w));
                }
            }
        }
    }

    #[test]
    fn validate_rejects_bad_schedules() {
        let c = synth::build_mqp(2).unwrap();
        let good = asap_schedule(&c);
        let mut merged = good.clone();
        let last = merged.stages.pop().unwrap();
        merged.stages[0].extend(last);
        assert!(merged.validate(&c).is_err());
        let mut missing = good.clone();
        missing.stages[0].clear();
        assert!(missing.validate(&c).is_err());
        let mut swapped = good;
        swapped.stages.swap(0, 1);
        assert!(swapped.validate(&c).is_err());
    }

    #[test]
    fn decompose_single_c3() {
        let c = Circuit::new(4, "c3", None)
            .unwrap()
            .append_gate([0usize, 1, 2], 3usize)
            .unwrap();
        let d = decompose_mcx(&c, 2).unwrap();
        assert_eq!(d.width(), 5);
        assert_eq!(d.len(), 3);
        assert!(d.gates().iter().all(|g| g.arity() == 2));
        // all 2^5 states: the ancilla always comes back unchanged, and with a
        // clean ancilla the original wires match the C3NOT
        for x in 0..32u64 {
            let out = run(&d, &BasisState::from_word(5, x).unwrap())
                .unwrap()
                .word();
            assert_eq!(out >> 4, x >> 4, "ancilla disturbed for x={x:05b}");
            if x >> 4 == 0 {
                let reference = run(&c, &BasisState::from_word(4, x).unwrap())
                    .unwrap()
                    .word();
                assert_eq!(out, reference, "x={x:05b}");
            }
        }
    }

    #[test]
    fn decompose_leaves_small_gates() {
        let c = Circuit::new(3, "t", None)
            .unwrap()
            .append_gate([0usize, 1], 2usize)
            .unwrap();
        assert_eq!(decompose_mcx(&c, 2).unwrap(), c);
        assert_eq!(decompose_mcx(&c, 1), Err(MetricsError::MaxArity(1)));
    }

    #[test]
    fn decompose_gate_counts() {
        let c = Circuit::new(8, "c6", None)
            .unwrap()
            .append_gate([0usize, 1, 2, 3, 4, 5], 7usize)
            .unwrap();
        let d = decompose_mcx(&c, 2).unwrap();
        assert_eq!(d.len(), 2 * (6 - 2) + 1);
        assert_eq!(d.width(), 8 + 4);
        // max_arity 6 keeps it
        assert_eq!(decompose_mcx(&c, 6).unwrap(), c);
    }

    proptest! {
        #[test]
        fn decomposition_is_equivalent(
            specs in proptest::collection::vec(
                (proptest::sample::subsequence((0..7usize).collect::<Vec<_>>(), 1..=7), any::<proptest::sample::Index>()),
                0..8,
            ),
        ) {
            let gates: Vec<Gate> = specs.into_iter().map(|(wires, idx)| {
                let t = wires[idx.index(wires.len())];
                Gate::new(wires.iter().copied().filter(|&w| w != t), t).unwrap()
            }).collect();
            let c = Circuit::from_gates(7, "p", None, gates).unwrap();
            let d = decompose_mcx(&c, 2).unwrap();
            prop_assert!(d.gates().iter().all(|g| g.arity() <= 2));
            let (x, y) = (CompiledCircuit::new(&c).unwrap(), CompiledCircuit::new(&d).unwrap());
            for w in 0..1u64 << 7 {
                prop_assert_eq!(y.run_word(w), x.run_word(w));
            }
            if d.width() <= 12 {
                prop_assert!(permutation_check(&d, 16).unwrap());
            }
        }
    }
}
