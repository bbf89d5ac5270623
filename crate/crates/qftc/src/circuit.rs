//! Circuit programs: ordered instructions over a register layout.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::sparse::SparseState;
use crate::state::{mask, Control, GateOp, Register, RegisterLayout, StateError, StateVector, ONE, ZERO};
use crate::tally::{CostModel, GateTally};

/// Function of input register values used by semantic arithmetic.
pub type ValueFn = Arc<dyn Fn(&[u64]) -> u64 + Send + Sync>;
/// Map `(inputs, output) -> new output`, injective in `output`.
pub type MapFn = Arc<dyn Fn(&[u64], u64) -> u64 + Send + Sync>;

/// How a semantic operation folds `g(inputs)` into its output register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Xor,
    Add,
    Sub,
}

impl Combine {
    fn inverse(self) -> Self {
        match self {
            Combine::Xor => Combine::Xor,
            Combine::Add => Combine::Sub,
            Combine::Sub => Combine::Add,
        }
    }

    #[must_use]
    pub fn apply(self, c: u64, g: u64, width: usize) -> u64 {
        let m = mask(width);
        match self {
            Combine::Xor => c ^ (g & m),
            Combine::Add => c.wrapping_add(g) & m,
            Combine::Sub => c.wrapping_sub(g) & m,
        }
    }
}

#[derive(Clone)]
pub enum BasisKind {
    Combine { g: ValueFn, mode: Combine },
    Map { f: MapFn, inverse: bool },
}

/// A basis permutation executed directly rather than through gates.
#[derive(Clone)]
pub struct BasisOp {
    pub name: String,
    pub inputs: Vec<Register>,
    pub output: Register,
    pub kind: BasisKind,
    pub controls: Vec<Control>,
}

impl fmt::Debug for BasisOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisOp")
            .field("name", &self.name)
            .field("inputs", &self.inputs)
            .field("output", &self.output)
            .field("controls", &self.controls)
            .finish_non_exhaustive()
    }
}

impl BasisOp {
    #[must_use]
    pub fn combine(
        name: impl Into<String>,
        inputs: Vec<Register>,
        output: Register,
        mode: Combine,
        g: ValueFn,
    ) -> Self {
        Self {
            name: name.into(),
            inputs,
            output,
            kind: BasisKind::Combine { g, mode },
            controls: Vec::new(),
        }
    }

    #[must_use]
    pub fn map(name: impl Into<String>, inputs: Vec<Register>, output: Register, f: MapFn) -> Self {
        Self {
            name: name.into(),
            inputs,
            output,
            kind: BasisKind::Map { f, inverse: false },
            controls: Vec::new(),
        }
    }

    fn inverse(&self) -> Self {
        let kind = match &self.kind {
            BasisKind::Combine { g, mode } => BasisKind::Combine {
                g: g.clone(),
                mode: mode.inverse(),
            },
            BasisKind::Map { f, inverse } => BasisKind::Map {
                f: f.clone(),
                inverse: !inverse,
            },
        };
        Self {
            name: format!("{}†", self.name),
            kind,
            ..self.clone()
        }
    }

    /// The output value this op assigns, given control bits (in order),
    /// input values and the current output value.
    fn evaluate(&self, ctrl_bits: &[u64], vals: &[u64], c: u64, cache: &mut InverseCache) -> u64 {
        let enabled = self
            .controls
            .iter()
            .zip(ctrl_bits)
            .all(|(ctl, b)| (*b == 1) == ctl.polarity);
        if !enabled {
            return c;
        }
        let w = self.output.len;
        match &self.kind {
            BasisKind::Combine { g, mode } => mode.apply(c, g(vals), w),
            BasisKind::Map { f, inverse: false } => f(vals, c),
            BasisKind::Map { f, inverse: true } => {
                let table = cache.entry(vals.to_vec()).or_insert_with(|| {
                    let size = 1usize << w;
                    let mut inv = vec![u64::MAX; size];
                    for x in 0..size as u64 {
                        let y = f(vals, x);
                        if (y as usize) < size {
                            inv[y as usize] = x;
                        }
                    }
                    inv
                });
                table[c as usize]
            }
        }
    }

    fn all_inputs(&self) -> Vec<Register> {
        let mut regs: Vec<Register> = self.controls.iter().map(|c| Register::new("ctl", c.qubit, 1)).collect();
        regs.extend(self.inputs.iter().cloned());
        regs
    }
}

type InverseCache = HashMap<Vec<u64>, Vec<u64>>;

/// Invocation of an oracle whose gates are not counted individually.
#[derive(Debug, Clone)]
pub struct OracleCall {
    pub name: String,
    pub body: Arc<Vec<GateOp>>,
    pub controls: Vec<Control>,
    pub adjoint: bool,
}

impl OracleCall {
    fn gates(&self) -> Vec<GateOp> {
        let body: Vec<GateOp> = if self.adjoint {
            self.body.iter().rev().map(GateOp::adjoint).collect()
        } else {
            self.body.to_vec()
        };
        body.into_iter().map(|g| g.ctrl(&self.controls)).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Instruction {
    Gate(GateOp),
    Oracle(OracleCall),
    Basis(BasisOp),
    /// `body` applied `times` times in a row.
    Repeat {
        body: Arc<CircuitProgram>,
        times: u64,
    },
}

impl Instruction {
    fn inverse(&self) -> Instruction {
        match self {
            Instruction::Gate(g) => Instruction::Gate(g.adjoint()),
            Instruction::Oracle(o) => Instruction::Oracle(OracleCall {
                adjoint: !o.adjoint,
                ..o.clone()
            }),
            Instruction::Basis(b) => Instruction::Basis(b.inverse()),
            Instruction::Repeat { body, times } => Instruction::Repeat {
                body: Arc::new(body.inverse()),
                times: *times,
            },
        }
    }

    fn controlled(&self, controls: &[Control]) -> Instruction {
        match self {
            Instruction::Gate(g) => Instruction::Gate(g.clone().ctrl(controls)),
            Instruction::Oracle(o) => {
                let mut o = o.clone();
                o.controls.extend_from_slice(controls);
                Instruction::Oracle(o)
            }
            Instruction::Basis(b) => {
                let mut b = b.clone();
                b.controls.extend_from_slice(controls);
                Instruction::Basis(b)
            }
            Instruction::Repeat { body, times } => Instruction::Repeat {
                body: Arc::new(body.controlled(controls)),
                times: *times,
            },
        }
    }

    fn qubits(&self, out: &mut Vec<usize>) {
        match self {
            Instruction::Gate(g) => out.extend(g.qubits()),
            Instruction::Oracle(o) => {
                for g in o.body.iter() {
                    out.extend(g.qubits());
                }
                out.extend(o.controls.iter().map(|c| c.qubit));
            }
            Instruction::Basis(b) => {
                for r in b.inputs.iter().chain(std::iter::once(&b.output)) {
                    out.extend(r.qubits());
                }
                out.extend(b.controls.iter().map(|c| c.qubit));
            }
            Instruction::Repeat { body, .. } => {
                for i in &body.instructions {
                    i.qubits(out);
                }
            }
        }
    }
}

/// Execution switches for dense simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Run `Repeat` blocks by compiling the body to a matrix on the qubits it
    /// touches and raising it to the power by squaring. Gives the same state
    /// as applying the body repeatedly.
    pub compile_repeats: bool,
}

/// Ordered instructions on a register layout.
#[derive(Debug, Clone, Default)]
pub struct CircuitProgram {
    pub layout: RegisterLayout,
    pub instructions: Vec<Instruction>,
    num_qubits: usize,
}

impl CircuitProgram {
    #[must_use]
    pub fn new(layout: RegisterLayout) -> Self {
        let num_qubits = layout.num_qubits();
        Self {
            layout,
            instructions: Vec::new(),
            num_qubits,
        }
    }

    /// Program over `n` anonymous qubits.
    #[must_use]
    pub fn on_qubits(n: usize) -> Self {
        let mut layout = RegisterLayout::new();
        if n > 0 {
            layout.add("q", n);
        }
        Self::new(layout)
    }

    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gate(&mut self, g: GateOp) -> &mut Self {
        self.push(Instruction::Gate(g))
    }

    /// Append an instruction; the program widens to cover its qubits.
    pub fn push(&mut self, i: Instruction) -> &mut Self {
        let mut q = Vec::new();
        i.qubits(&mut q);
        if let Some(m) = q.iter().max() {
            self.num_qubits = self.num_qubits.max(m + 1);
        }
        self.instructions.push(i);
        self
    }

    pub fn basis(&mut self, op: BasisOp) -> &mut Self {
        self.push(Instruction::Basis(op))
    }

    pub fn oracle(&mut self, call: OracleCall) -> &mut Self {
        self.push(Instruction::Oracle(call))
    }

    pub fn repeat(&mut self, body: Arc<CircuitProgram>, times: u64) -> &mut Self {
        if times > 0 {
            self.push(Instruction::Repeat { body, times });
        }
        self
    }

    /// Append another program acting on the same qubit numbering.
    pub fn append(&mut self, other: &CircuitProgram) -> &mut Self {
        self.instructions.extend(other.instructions.iter().cloned());
        self.num_qubits = self.num_qubits.max(other.num_qubits);
        self
    }

    /// Reverse order, adjoint of every instruction.
    #[must_use]
    pub fn inverse(&self) -> CircuitProgram {
        CircuitProgram {
            layout: self.layout.clone(),
            instructions: self.instructions.iter().rev().map(Instruction::inverse).collect(),
            num_qubits: self.num_qubits,
        }
    }

    /// Same program with `controls` added to every instruction.
    #[must_use]
    pub fn controlled(&self, controls: &[Control]) -> CircuitProgram {
        CircuitProgram {
            layout: self.layout.clone(),
            instructions: self.instructions.iter().map(|i| i.controlled(controls)).collect(),
            num_qubits: self.num_qubits,
        }
    }

    /// Analytic tally from the instruction list; nothing is simulated.
    #[must_use]
    pub fn tally(&self, model: &CostModel) -> GateTally {
        let mut t = GateTally::default();
        for i in &self.instructions {
            match i {
                Instruction::Gate(g) => t.record_gate(g, model),
                Instruction::Oracle(o) => {
                    if o.adjoint {
                        t.inverse_oracle_calls += 1;
                    } else {
                        t.oracle_calls += 1;
                    }
                }
                Instruction::Basis(_) => {}
                Instruction::Repeat { body, times } => t += body.tally(model).scaled(*times),
            }
        }
        t
    }

    /// Number of gate-level instructions after expanding repeats.
    #[must_use]
    pub fn gate_count(&self) -> u64 {
        self.instructions
            .iter()
            .map(|i| match i {
                Instruction::Gate(_) => 1,
                Instruction::Oracle(o) => o.body.len() as u64,
                Instruction::Basis(_) => 0,
                Instruction::Repeat { body, times } => body.gate_count() * times,
            })
            .sum()
    }

    /// Whether every instruction is a gate or oracle call.
    #[must_use]
    pub fn is_gate_level(&self) -> bool {
        self.instructions.iter().all(|i| match i {
            Instruction::Gate(_) | Instruction::Oracle(_) => true,
            Instruction::Basis(_) => false,
            Instruction::Repeat { body, .. } => body.is_gate_level(),
        })
    }

    /// Pure dense execution.
    pub fn run(&self, state: &StateVector) -> Result<StateVector, StateError> {
        let mut s = state.clone();
        self.run_mut(&mut s, ExecOptions::default())?;
        Ok(s)
    }

    pub fn run_mut(&self, state: &mut StateVector, opts: ExecOptions) -> Result<(), StateError> {
        let mut tally = GateTally::default();
        self.run_tracked(state, opts, &CostModel::default(), &mut tally)
    }

    /// Dense execution that tallies every gate actually applied.
    pub fn run_tracked(
        &self,
        state: &mut StateVector,
        opts: ExecOptions,
        model: &CostModel,
        tally: &mut GateTally,
    ) -> Result<(), StateError> {
        if self.num_qubits > state.num_qubits() {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: state.num_qubits(),
            });
        }
        for i in &self.instructions {
            match i {
                Instruction::Gate(g) => {
                    state.apply_gate_mut(g)?;
                    tally.record_gate(g, model);
                }
                Instruction::Oracle(o) => {
                    for g in o.gates() {
                        state.apply_gate_mut(&g)?;
                    }
                    if o.adjoint {
                        tally.inverse_oracle_calls += 1;
                    } else {
                        tally.oracle_calls += 1;
                    }
                }
                Instruction::Basis(b) => run_basis_dense(b, state)?,
                Instruction::Repeat { body, times } => {
                    if opts.compile_repeats && *times > 1 && body.is_gate_level() {
                        let (gate, _) = body.compile_power(*times)?;
                        state.apply_gate_mut(&gate)?;
                        *tally += body.tally(model).scaled(*times);
                    } else {
                        for _ in 0..*times {
                            body.run_tracked(state, opts, model, tally)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Execute on a sparse state.
    pub fn run_sparse(&self, state: &mut SparseState) -> Result<(), StateError> {
        for i in &self.instructions {
            match i {
                Instruction::Gate(g) => state.apply_gate(g)?,
                Instruction::Oracle(o) => {
                    for g in o.gates() {
                        state.apply_gate(&g)?;
                    }
                }
                Instruction::Basis(b) => {
                    let regs = b.all_inputs();
                    let nc = b.controls.len();
                    let mut cache = InverseCache::new();
                    let cache = std::cell::RefCell::new(&mut cache);
                    state.apply_basis_function(&regs, &b.output, |v, c| {
                        b.evaluate(&v[..nc], &v[nc..], c, &mut cache.borrow_mut())
                    })?;
                }
                Instruction::Repeat { body, times } => {
                    for _ in 0..*times {
                        body.run_sparse(state)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Every qubit touched, ascending.
    #[must_use]
    pub fn support(&self) -> Vec<usize> {
        let mut q = Vec::new();
        for i in &self.instructions {
            i.qubits(&mut q);
        }
        q.sort_unstable();
        q.dedup();
        q
    }

    /// Matrix of a gate-level program restricted to the qubits it touches.
    ///
    /// Returns the matrix (row-major, first support qubit most significant)
    /// and the support.
    pub fn local_unitary(&self) -> Result<(Vec<Complex64>, Vec<usize>), StateError> {
        let support = self.support();
        let s = support.len();
        if s > 12 {
            return Err(StateError::TooManyQubits(s));
        }
        let local = |q: usize| support.binary_search(&q).expect("qubit in support");
        let gates = self.flatten_gates();
        let local_gates: Vec<GateOp> = gates.iter().map(|g| g.remap(local)).collect();
        let d = 1usize << s;
        let mut m = vec![ZERO; d * d];
        for col in 0..d {
            let mut v = StateVector::basis(s, col)?;
            for g in &local_gates {
                v.apply_gate_mut(g)?;
            }
            for (row, a) in v.amplitudes().iter().enumerate() {
                m[row * d + col] = *a;
            }
        }
        Ok((m, support))
    }

    /// Gates in execution order with repeats expanded.
    fn flatten_gates(&self) -> Vec<GateOp> {
        let mut out = Vec::new();
        for i in &self.instructions {
            match i {
                Instruction::Gate(g) => out.push(g.clone()),
                Instruction::Oracle(o) => out.extend(o.gates()),
                Instruction::Basis(_) => panic!("basis operations have no gate form"),
                Instruction::Repeat { body, times } => {
                    let inner = body.flatten_gates();
                    for _ in 0..*times {
                        out.extend(inner.iter().cloned());
                    }
                }
            }
        }
        out
    }

    /// The program raised to `times`, as a single gate on its support.
    ///
    /// Controls shared by every gate are kept as controls of the result so
    /// that the compiled matrix stays small.
    pub fn compile_power(&self, times: u64) -> Result<(GateOp, Vec<usize>), StateError> {
        let gates = self.flatten_gates();
        let mut common: Vec<Control> = gates.first().map(|g| g.controls.clone()).unwrap_or_default();
        common.retain(|c| gates.iter().all(|g| g.controls.contains(c)));
        let stripped = CircuitProgram {
            layout: self.layout.clone(),
            instructions: gates
                .into_iter()
                .map(|mut g| {
                    g.controls.retain(|c| !common.contains(c));
                    Instruction::Gate(g)
                })
                .collect(),
            num_qubits: self.num_qubits,
        };
        let (m, support) = stripped.local_unitary()?;
        let d = 1usize << support.len();
        let p = matrix_power(&m, d, times);
        let gate = GateOp::new_unchecked(format!("compiled^{times}"), p, support.clone()).ctrl(&common);
        Ok((gate, support))
    }
}

fn run_basis_dense(b: &BasisOp, state: &mut StateVector) -> Result<(), StateError> {
    let regs = b.all_inputs();
    let nc = b.controls.len();
    let mut cache = InverseCache::new();
    let cache = std::cell::RefCell::new(&mut cache);
    state.apply_basis_function_mut(&regs, &b.output, |v, c| {
        b.evaluate(&v[..nc], &v[nc..], c, &mut cache.borrow_mut())
    })
}

fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; d * d];
    for i in 0..d {
        for k in 0..d {
            let x = a[i * d + k];
            if x == ZERO {
                continue;
            }
            for j in 0..d {
                c[i * d + j] += x * b[k * d + j];
            }
        }
    }
    c
}

fn matrix_power(m: &[Complex64], d: usize, mut e: u64) -> Vec<Complex64> {
    let mut result: Vec<Complex64> = (0..d * d).map(|i| if i / d == i % d { ONE } else { ZERO }).collect();
    let mut base = m.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = matmul(&base, &result, d);
        }
        e >>= 1;
        if e > 0 {
            base = matmul(&base, &base, d);
        }
    }
    result
}
