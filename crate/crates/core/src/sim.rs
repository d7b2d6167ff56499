//! Exact basis-state simulation.
//!
//! Every gate in the IR permutes classical bitstrings, so a basis state is a
//! single machine word and a gate is a mask test plus a bit flip.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{AdderKind, Circuit, Gate, RegisterLayout};
use crate::synth::{self, SynthError};

/// Widest register a basis state can hold.
pub const MAX_WIDTH: usize = 64;

pub const DEFAULT_MAX_EXHAUSTIVE_N: usize = 8;
pub const DEFAULT_MAX_PERMUTATION_WIDTH: usize = 16;
pub const DEFAULT_MAX_COUNTEREXAMPLES: usize = 10;

pub const ENV_MAX_EXHAUSTIVE_N: &str = "REVADD_MAX_EXHAUSTIVE_N";
pub const ENV_MAX_PERMUTATION_WIDTH: &str = "REVADD_MAX_PERMUTATION_WIDTH";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("width {0} exceeds the {MAX_WIDTH}-wire simulation limit")]
    WidthTooLarge(usize),
    #[error("state has {state} wires but circuit has {circuit}")]
    LengthMismatch { state: usize, circuit: usize },
    #[error("gate touches wire {wire} but state has {width} wires")]
    WireOutOfRange { wire: usize, width: usize },
    #[error("operand {value} does not fit in {n} bits")]
    OperandOutOfRange { value: u64, n: usize },
    #[error("circuit `{0}` has no register layout")]
    NoLayout(String),
    #[error("{what} {value} exceeds the configured limit {limit}")]
    LimitExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// A classical assignment to every wire; bit i of the word is wire i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    width: usize,
    word: u64,
}

fn width_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl BasisState {
    pub fn zero(width: usize) -> Result<Self, SimError> {
        Self::from_word(width, 0)
    }

    /// Bits above `width` are discarded.
    pub fn from_word(width: usize, word: u64) -> Result<Self, SimError> {
        if width > MAX_WIDTH {
            return Err(SimError::WidthTooLarge(width));
        }
        Ok(BasisState {
            width,
            word: word & width_mask(width),
        })
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Result<Self, SimError> {
        let mut word = 0u64;
        let mut width = 0;
        for bit in bits {
            if width >= MAX_WIDTH {
                return Err(SimError::WidthTooLarge(width + 1));
            }
            word |= (bit as u64) << width;
            width += 1;
        }
        Ok(BasisState { width, word })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn bit(&self, wire: usize) -> bool {
        wire < self.width && self.word >> wire & 1 == 1
    }
}

impl fmt::Display for BasisState {
    /// Wire 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Flips the target iff every control is set.
pub fn apply_gate(state: &BasisState, gate: &Gate) -> Result<BasisState, SimError> {
    if let Some(w) = gate.wires().find(|w| w.0 >= state.width) {
        return Err(SimError::WireOutOfRange {
            wire: w.0,
            width: state.width,
        });
    }
    let op = MaskedGate::from(gate);
    Ok(BasisState {
        width: state.width,
        word: op.apply(state.word),
    })
}

pub fn run(circuit: &Circuit, input: &BasisState) -> Result<BasisState, SimError> {
    if input.width != circuit.width() {
        return Err(SimError::LengthMismatch {
            state: input.width,
            circuit: circuit.width(),
        });
    }
    let compiled = CompiledCircuit::new(circuit)?;
    Ok(BasisState {
        width: input.width,
        word: compiled.run_word(input.word),
    })
}

#[derive(Debug, Clone, Copy)]
struct MaskedGate {
    controls: u64,
    target: u64,
}

impl From<&Gate> for MaskedGate {
    fn from(gate: &Gate) -> Self {
        MaskedGate {
            controls: gate.controls().iter().fold(0, |m, c| m | 1 << c.0),
            target: 1 << gate.target().0,
        }
    }
}

impl MaskedGate {
    #[inline]
    fn apply(self, word: u64) -> u64 {
        if word & self.controls == self.controls {
            word ^ self.target
        } else {
            word
        }
    }
}

/// A circuit lowered to control/target masks for fast repeated runs.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    width: usize,
    ops: Vec<MaskedGate>,
}

impl CompiledCircuit {
    pub fn new(circuit: &Circuit) -> Result<Self, SimError> {
        if circuit.width() > MAX_WIDTH {
            return Err(SimError::WidthTooLarge(circuit.width()));
        }
        Ok(CompiledCircuit {
            width: circuit.width(),
            ops: circuit.gates().iter().map(MaskedGate::from).collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn run_word(&self, word: u64) -> u64 {
        self.ops.iter().fold(word, |w, op| op.apply(w))
    }
}

/// Decoded output of one adder run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdderResult {
    /// Read from the b-wires, little-endian.
    pub sum: u64,
    pub carry_out: bool,
    /// The a-wires after the run.
    pub operand_a: u64,
    /// The c0 wire after the run.
    pub carry_in: bool,
    /// Internal c_i (plain adders) or g_i (QCLA) wires, i = 1..n−1.
    pub internal: Vec<bool>,
}

/// An adder circuit plus its layout, compiled for repeated evaluation.
///
/// Also accepts circuits wider than their layout (e.g. after
/// [`crate::metrics::decompose_mcx`]); extra wires start at zero and are
/// reported through [`AdderHarness::scratch_clean`].
#[derive(Debug, Clone)]
pub struct AdderHarness {
    layout: RegisterLayout,
    compiled: CompiledCircuit,
    layout_mask: u64,
}

impl AdderHarness {
    pub fn new(kind: AdderKind, n: usize) -> Result<Self, SimError> {
        Self::for_circuit(&synth::build(kind, n)?)
    }

    pub fn for_circuit(circuit: &Circuit) -> Result<Self, SimError> {
        let layout = circuit
            .layout()
            .cloned()
            .ok_or_else(|| SimError::NoLayout(circuit.name().to_owned()))?;
        let compiled = CompiledCircuit::new(circuit)?;
        let layout_mask = layout.roles().iter().fold(0u64, |m, (_, w)| m | 1 << w.0);
        Ok(AdderHarness {
            layout,
            compiled,
            layout_mask,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn kind(&self) -> AdderKind {
        self.layout.kind()
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    fn check_operand(&self, value: u64) -> Result<(), SimError> {
        let n = self.n();
        if n < 64 && value >> n != 0 {
            return Err(SimError::OperandOutOfRange { value, n });
        }
        Ok(())
    }

    /// Input word: a on a-wires, b on b-wires, c0 on the c0 wire, all else 0.
    pub fn encode(&self, a: u64, b: u64, c0: bool) -> Result<u64, SimError> {
        self.check_operand(a)?;
        self.check_operand(b)?;
        let l = &self.layout;
        let mut word = (c0 as u64) << l.c0().0;
        for i in 0..l.n() {
            word |= (a >> i & 1) << l.a_wires()[i].0;
            word |= (b >> i & 1) << l.b_wires()[i].0;
        }
        Ok(word)
    }

    pub fn decode(&self, word: u64) -> AdderResult {
        let l = &self.layout;
        let read = |wires: &[crate::circuit::WireIndex]| {
            wires
                .iter()
                .enumerate()
                .fold(0u64, |v, (i, w)| v | (word >> w.0 & 1) << i)
        };
        AdderResult {
            sum: read(l.b_wires()),
            carry_out: word >> l.cout().0 & 1 == 1,
            operand_a: read(l.a_wires()),
            carry_in: word >> l.c0().0 & 1 == 1,
            internal: l
                .ancilla_wires()
                .iter()
                .map(|w| word >> w.0 & 1 == 1)
                .collect(),
        }
    }

    pub fn run_word(&self, word: u64) -> u64 {
        self.compiled.run_word(word)
    }

    /// True iff every wire outside the layout is zero in `word`.
    pub fn scratch_clean(&self, word: u64) -> bool {
        word & !self.layout_mask & width_mask(self.compiled.width()) == 0
    }

    pub fn add(&self, a: u64, b: u64, c0: bool) -> Result<AdderResult, SimError> {
        let input = self.encode(a, b, c0)?;
        Ok(self.decode(self.run_word(input)))
    }
}

type HarnessCache = Mutex<HashMap<(AdderKind, usize), Arc<AdderHarness>>>;

fn harness_cache() -> &'static HarnessCache {
    static CACHE: OnceLock<HarnessCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached_harness(kind: AdderKind, n: usize) -> Result<Arc<AdderHarness>, SimError> {
    if let Some(h) = harness_cache().lock().unwrap().get(&(kind, n)) {
        return Ok(Arc::clone(h));
    }
    let harness = Arc::new(AdderHarness::new(kind, n)?);
    harness_cache()
        .lock()
        .unwrap()
        .insert((kind, n), Arc::clone(&harness));
    Ok(harness)
}

/// Adds `a + b + c0` on an n-bit adder circuit of the given kind.
pub fn add(kind: AdderKind, n: usize, a: u64, b: u64, c0: bool) -> Result<AdderResult, SimError> {
    cached_harness(kind, n)?.add(a, b, c0)
}

/// Bounds on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub max_n: usize,
    pub max_permutation_width: usize,
    pub max_counterexamples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            max_n: DEFAULT_MAX_EXHAUSTIVE_N,
            max_permutation_width: DEFAULT_MAX_PERMUTATION_WIDTH,
            max_counterexamples: DEFAULT_MAX_COUNTEREXAMPLES,
        }
    }
}

impl VerifyConfig {
    /// Defaults overridden by `REVADD_MAX_EXHAUSTIVE_N` and
    /// `REVADD_MAX_PERMUTATION_WIDTH` when set to valid integers.
    pub fn from_env() -> Self {
        let read = |key: &str| std::env::var(key).ok().and_then(|v| v.trim().parse().ok());
        let mut config = VerifyConfig::default();
        if let Some(v) = read(ENV_MAX_EXHAUSTIVE_N) {
            config.max_n = v;
        }
        if let Some(v) = read(ENV_MAX_PERMUTATION_WIDTH) {
            config.max_permutation_width = v;
        }
        config
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub a: u64,
    pub b: u64,
    pub c0: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub kind: AdderKind,
    pub n: usize,
    /// Inputs checked; equals 2^(2n+1) unless the sweep aborted.
    pub cases: u64,
    pub failures: Vec<Counterexample>,
    /// Set when the sweep stopped at the counterexample limit.
    pub aborted: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Ripple carries C_1..C_n by the bitwise recurrence
/// C_i = a_i·b_i ^ (a_i ^ b_i)·C_{i−1}.
fn ripple_carries(n: usize, a: u64, b: u64, c0: bool) -> Vec<bool> {
    let mut carry = c0;
    (0..n)
        .map(|i| {
            let ai = a >> i & 1 == 1;
            let bi = b >> i & 1 == 1;
            carry = (ai && bi) ^ ((ai ^ bi) && carry);
            carry
        })
        .collect()
}

fn check_case(h: &AdderHarness, a: u64, b: u64, c0: bool) -> Option<String> {
    let n = h.n();
    let out = h.run_word(h.encode(a, b, c0).ok()?);
    let r = h.decode(out);
    let total = a as u128 + b as u128 + c0 as u128;
    let expect_sum = (total & ((1u128 << n) - 1)) as u64;
    let expect_carry = total >> n == 1;
    let mut problems = Vec::new();
    if r.sum != expect_sum {
        problems.push(format!("sum {} != {}", r.sum, expect_sum));
    }
    if r.carry_out != expect_carry {
        problems.push(format!(
            "carry_out {} != {}",
            r.carry_out as u8, expect_carry as u8
        ));
    }
    if r.operand_a != a {
        problems.push(format!("a-wires {} != {}", r.operand_a, a));
    }
    if r.carry_in != c0 {
        problems.push("c0 wire modified".to_owned());
    }
    let expect_internal: Vec<bool> = match h.kind() {
        AdderKind::Cqp => vec![false; n - 1],
        AdderKind::Mqp => ripple_carries(n, a, b, c0)[..n - 1].to_vec(),
        AdderKind::Qcla => (0..n - 1).map(|i| (a & b) >> i & 1 == 1).collect(),
    };
    if r.internal != expect_internal {
        problems.push(format!(
            "ancillas {:?} != {:?}",
            bits_str(&r.internal),
            bits_str(&expect_internal)
        ));
    }
    if !h.scratch_clean(out) {
        problems.push("scratch wires not restored".to_owned());
    }
    (!problems.is_empty()).then(|| problems.join("; "))
}

fn bits_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Checks a built adder of `kind`/`n` on every (a, b, c0).
pub fn exhaustive_verify(
    kind: AdderKind,
    n: usize,
    config: &VerifyConfig,
) -> Result<VerificationReport, SimError> {
    if n > config.max_n {
        return Err(SimError::LimitExceeded {
            what: "operand width",
            value: n,
            limit: config.max_n,
        });
    }
    verify_adder_circuit(&synth::build(kind, n)?, config)
}

/// Checks any circuit carrying an adder layout on every (a, b, c0): sum,
/// carry-out, a-preservation, the kind's ancilla contract, and that wires
/// outside the layout return to zero.
pub fn verify_adder_circuit(
    circuit: &Circuit,
    config: &VerifyConfig,
) -> Result<VerificationReport, SimError> {
    let harness = AdderHarness::for_circuit(circuit)?;
    let n = harness.n();
    if n > config.max_n {
        return Err(SimError::LimitExceeded {
            what: "operand width",
            value: n,
            limit: config.max_n,
        });
    }
    let limit = config.max_counterexamples.max(1);
    let span = 1u64 << n;
    let mut failures: Vec<Counterexample> = (0..span)
        .into_par_iter()
        .flat_map_iter(|a| {
            let h = &harness;
            (0..span).flat_map(move |b| {
                [false, true].into_iter().filter_map(move |c0| {
                    check_case(h, a, b, c0).map(|reason| Counterexample { a, b, c0, reason })
                })
            })
        })
        .take_any(limit)
        .collect();
    failures.sort_by_key(|c| (c.a, c.b, c.c0));
    let aborted = failures.len() >= limit;
    let total = 2 * span * span;
    Ok(VerificationReport {
        kind: harness.kind(),
        n,
        // an aborted parallel sweep has no well-defined prefix; report the
        // failures found
        cases: if aborted {
            failures.len() as u64
        } else {
            total
        },
        failures,
        aborted,
    })
}

/// True iff the circuit maps the 2^width basis states bijectively.
pub fn permutation_check(circuit: &Circuit, max_width: usize) -> Result<bool, SimError> {
    let width = circuit.width();
    if width > max_width {
        return Err(SimError::LimitExceeded {
            what: "circuit width",
            value: width,
            limit: max_width,
        });
    }
    if width > 32 {
        return Err(SimError::WidthTooLarge(width));
    }
    let compiled = CompiledCircuit::new(circuit)?;
    let states = 1u64 << width;
    let mut seen = vec![0u64; (states as usize).div_ceil(64)];
    for x in 0..states {
        let y = compiled.run_word(x);
        if y >= states {
            return Ok(false);
        }
        let (slot, bit) = ((y / 64) as usize, y % 64);
        if seen[slot] >> bit & 1 == 1 {
            return Ok(false);
        }
        seen[slot] |= 1 << bit;
    }
    Ok(true)
}
