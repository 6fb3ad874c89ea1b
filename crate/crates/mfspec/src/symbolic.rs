//! Subshifts of finite type, admissible words, locally constant potentials,
//! and Markov measures.
//!
//! All dynamics in this crate are evaluated on cylinders rather than on
//! sampled orbits: a depth-`k` potential is constant on each `k`-cylinder, so
//! Birkhoff sums over words are exact. With the metric
//! `d(x, y) = 2^-min{i : x_i != y_i}` every Bowen ball of radius below 1/2 is
//! a cylinder, which makes the cover sums downstream exact as well.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Default cap on enumerated admissible words (overridable via
/// `MFSPEC_MAX_WORDS` in the CLI).
pub const DEFAULT_MAX_WORDS: u64 = 1 << 24;

/// Subshift of finite type over symbols `0..m` with an irreducible
/// transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sft {
    alphabet_size: usize,
    transitions: Vec<Vec<bool>>,
    successors: Vec<Vec<u8>>,
    primitivity_period: usize,
}

impl Sft {
    /// Validates a 0/1 transition matrix: every symbol needs a successor and
    /// a predecessor, and the matrix must be irreducible. The period of the
    /// transition graph is computed as a by-product.
    pub fn new(transitions: Vec<Vec<bool>>) -> Result<Self> {
        let m = transitions.len();
        if m == 0 || m > u8::MAX as usize {
            return Err(Error::InvalidInput(format!(
                "alphabet size {m} out of supported range 1..=255"
            )));
        }
        if transitions.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidInput("transition matrix is not square".into()));
        }
        for (i, row) in transitions.iter().enumerate() {
            if !row.iter().any(|&t| t) {
                return Err(Error::EmptyRow { symbol: i });
            }
        }
        for j in 0..m {
            if !(0..m).any(|i| transitions[i][j]) {
                return Err(Error::EmptyColumn { symbol: j });
            }
        }
        // Irreducibility: BFS reachability from every state.
        for start in 0..m {
            let mut seen = vec![false; m];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for v in 0..m {
                    if transitions[u][v] && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::NotIrreducible {
                    from: start,
                    to: missing,
                });
            }
        }
        let period = graph_period(&transitions);
        let successors = (0..m)
            .map(|a| {
                (0..m)
                    .filter(|&b| transitions[a][b])
                    .map(|b| b as u8)
                    .collect()
            })
            .collect();
        Ok(Sft {
            alphabet_size: m,
            transitions,
            successors,
            primitivity_period: period,
        })
    }

    pub fn full_shift(m: usize) -> Self {
        Sft::new(vec![vec![true; m]; m]).expect("full shift is always valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn primitivity_period(&self) -> usize {
        self.primitivity_period
    }

    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize][b as usize]
    }

    pub fn successors(&self, a: u8) -> &[u8] {
        &self.successors[a as usize]
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.transitions
    }

    /// True when every adjacent pair of `word` is an allowed transition.
    pub fn is_admissible(&self, word: &[u8]) -> bool {
        word.iter().all(|&s| (s as usize) < self.alphabet_size)
            && word.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Number of admissible words of length `n`, by the transfer recursion
    /// (exact integer arithmetic).
    pub fn word_count(&self, n: usize) -> u128 {
        let m = self.alphabet_size;
        if n == 0 {
            return 1;
        }
        let mut counts = vec![1u128; m];
        for _ in 1..n {
            let mut next = vec![0u128; m];
            for a in 0..m {
                for &b in self.successors(a as u8) {
                    next[b as usize] += counts[a];
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }

    /// Lexicographically minimal infinite admissible extension of `prefix`,
    /// truncated to `len` symbols.
    pub fn lex_min_extension(&self, prefix: &[u8], len: usize) -> Vec<u8> {
        let mut out = prefix.to_vec();
        while out.len() < len {
            let last = *out.last().expect("nonempty prefix");
            let next = self.successors(last)[0];
            out.push(next);
        }
        out.truncate(len);
        out
    }
}

/// Period of a strongly connected 0/1 digraph: gcd over all edges `(u, v)` of
/// `level(u) + 1 - level(v)` for BFS levels from an arbitrary root.
fn graph_period(transitions: &[Vec<bool>]) -> usize {
    let m = transitions.len();
    let mut level = vec![usize::MAX; m];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        for v in 0..m {
            if transitions[u][v] && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: i64 = 0;
    for u in 0..m {
        for v in 0..m {
            if transitions[u][v] {
                let d = level[u] as i64 + 1 - level[v] as i64;
                g = gcd(g, d.abs());
            }
        }
    }
    g.max(1) as usize
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Finite admissible word over an SFT alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.0 {
            if s < 10 {
                write!(f, "{s}")?;
            } else {
                write!(f, "({s})")?;
            }
        }
        Ok(())
    }
}

/// All admissible words of length `n` in lexicographic order.
///
/// Fails with `ResourceLimit` when the admissible count exceeds `cap`; the
/// count is obtained from the transfer recursion before any allocation.
pub fn enumerate_words(sft: &Sft, n: usize, cap: u64) -> Result<Vec<Word>> {
    let needed = sft.word_count(n);
    if needed > cap as u128 {
        return Err(Error::ResourceLimit { needed, cap });
    }
    let mut out = Vec::with_capacity(needed as usize);
    if n == 0 {
        out.push(Word(Vec::new()));
        return Ok(out);
    }
    let mut buf = Vec::with_capacity(n);
    for a in 0..sft.alphabet_size() as u8 {
        buf.push(a);
        extend_words(sft, n, &mut buf, &mut out);
        buf.pop();
    }
    Ok(out)
}

fn extend_words(sft: &Sft, n: usize, buf: &mut Vec<u8>, out: &mut Vec<Word>) {
    if buf.len() == n {
        out.push(Word(buf.clone()));
        return;
    }
    let last = *buf.last().unwrap();
    for &b in sft.successors(last) {
        buf.push(b);
        extend_words(sft, n, buf, out);
        buf.pop();
    }
}

/// Visits every admissible word of length `n` depth-first in lexicographic
/// order without materializing the list.
pub fn visit_words(sft: &Sft, n: usize, cap: u64, mut visit: impl FnMut(&[u8])) -> Result<()> {
    let needed = sft.word_count(n);
    if needed > cap as u128 {
        return Err(Error::ResourceLimit { needed, cap });
    }
    if n == 0 {
        visit(&[]);
        return Ok(());
    }
    let mut buf = Vec::with_capacity(n);
    fn rec(sft: &Sft, n: usize, buf: &mut Vec<u8>, visit: &mut impl FnMut(&[u8])) {
        if buf.len() == n {
            visit(buf);
            return;
        }
        let last = *buf.last().unwrap();
        for &b in sft.successors(last) {
            buf.push(b);
            rec(sft, n, buf, visit);
            buf.pop();
        }
    }
    for a in 0..sft.alphabet_size() as u8 {
        buf.push(a);
        rec(sft, n, &mut buf, &mut visit);
        buf.pop();
    }
    Ok(())
}

/// Real-valued function on admissible words of a fixed depth `k`;
/// the crate's realization of a dense subspace of continuous potentials.
///
/// Values are stored densely indexed by the base-`m` encoding of the word;
/// slots of inadmissible words hold NaN and are never read by valid callers.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantPotential {
    alphabet_size: usize,
    depth: usize,
    values: Vec<f64>,
}

impl LocallyConstantPotential {
    /// Builds a depth-`k` potential from a value per admissible `k`-word.
    pub fn from_map(sft: &Sft, depth: usize, map: &BTreeMap<Word, f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidInput("potential depth must be >= 1".into()));
        }
        let m = sft.alphabet_size();
        let size = m
            .checked_pow(depth as u32)
            .ok_or_else(|| Error::InvalidInput("potential depth too large".into()))?;
        let mut values = vec![f64::NAN; size];
        let words = enumerate_words(sft, depth, DEFAULT_MAX_WORDS)?;
        for w in &words {
            let v = *map.get(w).ok_or_else(|| {
                Error::InvalidInput(format!("missing value for admissible word {w}"))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value at word {w}")));
            }
            values[encode(m, w.symbols())] = v;
        }
        for (w, _) in map.iter() {
            if w.len() != depth || !sft.is_admissible(w.symbols()) {
                return Err(Error::InvalidInput(format!(
                    "word {w} is not an admissible word of depth {depth}"
                )));
            }
        }
        Ok(Self {
            alphabet_size: m,
            depth,
            values,
        })
    }

    /// Depth-1 potential from one value per symbol.
    pub fn from_symbols(sft: &Sft, values: &[f64]) -> Result<Self> {
        if values.len() != sft.alphabet_size() {
            return Err(Error::InvalidInput(
                "symbol value count does not match alphabet".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite potential value".into()));
        }
        Ok(Self {
            alphabet_size: sft.alphabet_size(),
            depth: 1,
            values: values.to_vec(),
        })
    }

    pub fn constant(sft: &Sft, c: f64) -> Self {
        Self::from_symbols(sft, &vec![c; sft.alphabet_size()]).expect("constant is valid")
    }

    /// Indicator of the cylinder of `word`.
    pub fn indicator(sft: &Sft, word: &[u8]) -> Result<Self> {
        let m = sft.alphabet_size();
        if word.is_empty() || !sft.is_admissible(word) {
            return Err(Error::InvalidInput("indicator word must be admissible".into()));
        }
        let mut values = vec![0.0; m.pow(word.len() as u32)];
        values[encode(m, word)] = 1.0;
        Ok(Self {
            alphabet_size: m,
            depth: word.len(),
            values,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Value on the cylinder of `window`; `window` must have length `depth`.
    pub fn value(&self, window: &[u8]) -> f64 {
        debug_assert_eq!(window.len(), self.depth);
        self.values[encode(self.alphabet_size, window)]
    }

    /// Constant extension to a deeper cylinder structure: the lifted value on
    /// a `K`-word is the value on its first `k` symbols.
    pub fn lift(&self, sft: &Sft, new_depth: usize) -> Result<Self> {
        assert!(new_depth >= self.depth, "lift cannot reduce depth");
        if new_depth == self.depth {
            return Ok(self.clone());
        }
        let m = self.alphabet_size;
        let size = m
            .checked_pow(new_depth as u32)
            .ok_or_else(|| Error::InvalidInput("lift depth too large".into()))?;
        let mut values = vec![f64::NAN; size];
        visit_words(sft, new_depth, DEFAULT_MAX_WORDS, |w| {
            values[encode(m, w)] = self.value(&w[..self.depth]);
        })?;
        Ok(Self {
            alphabet_size: m,
            depth: new_depth,
            values,
        })
    }

    /// Birkhoff sum `S_n` over the first `n` windows of `word`
    /// (requires `word.len() >= n + depth - 1`).
    pub fn birkhoff_sum(&self, word: &[u8], n: usize) -> f64 {
        debug_assert!(word.len() >= n + self.depth - 1);
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.value(&word[j..j + self.depth]);
        }
        acc
    }

    /// Pointwise extremes over admissible depth words.
    pub fn value_range(&self, sft: &Sft) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        visit_words(sft, self.depth, DEFAULT_MAX_WORDS, |w| {
            let v = self.value(w);
            lo = lo.min(v);
            hi = hi.max(v);
        })
        .expect("depth enumeration below cap");
        (lo, hi)
    }

    /// Sup norm over admissible words.
    pub fn sup_norm(&self, sft: &Sft) -> f64 {
        let (lo, hi) = self.value_range(sft);
        lo.abs().max(hi.abs())
    }

    /// Pointwise combination `sum_i coeffs[i] * pots[i] + shift`, all lifted
    /// to the common depth.
    pub fn linear_combination(
        sft: &Sft,
        terms: &[(f64, &LocallyConstantPotential)],
        shift: f64,
    ) -> Result<Self> {
        assert!(!terms.is_empty());
        let depth = terms.iter().map(|(_, p)| p.depth).max().unwrap();
        let lifted: Vec<LocallyConstantPotential> = terms
            .iter()
            .map(|(_, p)| p.lift(sft, depth))
            .collect::<Result<_>>()?;
        let m = sft.alphabet_size();
        let mut values = vec![f64::NAN; m.pow(depth as u32)];
        visit_words(sft, depth, DEFAULT_MAX_WORDS, |w| {
            let mut acc = shift;
            for ((c, _), p) in terms.iter().zip(&lifted) {
                acc += c * p.value(w);
            }
            values[encode(m, w)] = acc;
        })?;
        Ok(Self {
            alphabet_size: m,
            depth,
            values,
        })
    }
}

pub(crate) fn encode(m: usize, word: &[u8]) -> usize {
    word.iter().fold(0usize, |acc, &s| acc * m + s as usize)
}

/// Tuple of potentials evaluated simultaneously, lifted to one common depth.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPotential {
    components: Vec<LocallyConstantPotential>,
}

impl VectorPotential {
    pub fn new(sft: &Sft, components: Vec<LocallyConstantPotential>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput(
                "vector potential needs at least one component".into(),
            ));
        }
        let depth = components.iter().map(|p| p.depth()).max().unwrap();
        let components = components
            .into_iter()
            .map(|p| p.lift(sft, depth))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn depth(&self) -> usize {
        self.components[0].depth()
    }

    pub fn component(&self, i: usize) -> &LocallyConstantPotential {
        &self.components[i]
    }

    pub fn components(&self) -> &[LocallyConstantPotential] {
        &self.components
    }
}

/// Componentwise ratio vector `S_n(phi_i) / S_n(psi_i)` of the first
/// `n = |w| - k + 1` windows of `w`, where `k` is the common depth of the
/// lifted pair. A component with a zero denominator is `None`.
pub fn birkhoff_ratio(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    w: &Word,
) -> Result<Vec<Option<f64>>> {
    if phi.dim() != psi.dim() {
        return Err(Error::InvalidInput(
            "numerator and denominator dimensions differ".into(),
        ));
    }
    let k = phi.depth().max(psi.depth());
    if w.len() < k {
        return Err(Error::DepthMismatch {
            word_len: w.len(),
            needed: k,
        });
    }
    let phi = lift_vector(sft, phi, k)?;
    let psi = lift_vector(sft, psi, k)?;
    let n = w.len() - k + 1;
    let mut out = Vec::with_capacity(phi.dim());
    for i in 0..phi.dim() {
        let num = phi.component(i).birkhoff_sum(w.symbols(), n);
        let den = psi.component(i).birkhoff_sum(w.symbols(), n);
        out.push(if den == 0.0 { None } else { Some(num / den) });
    }
    Ok(out)
}

pub(crate) fn lift_vector(sft: &Sft, v: &VectorPotential, depth: usize) -> Result<VectorPotential> {
    if v.depth() == depth {
        return Ok(v.clone());
    }
    VectorPotential::new(
        sft,
        v.components()
            .iter()
            .map(|p| p.lift(sft, depth))
            .collect::<Result<_>>()?,
    )
}

/// Shift-invariant Markov measure of a given order: a stochastic kernel on
/// admissible order-words together with its stationary distribution.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    order: usize,
    states: Vec<Word>,
    state_index: BTreeMap<Vec<u8>, usize>,
    /// kernel[s][a] = probability of appending symbol `a` to state `s`.
    kernel: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovMeasure {
    pub fn new(sft: &Sft, order: usize, kernel: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("Markov order must be >= 1".into()));
        }
        let states = enumerate_words(sft, order, DEFAULT_MAX_WORDS)?;
        let n = states.len();
        if kernel.len() != n || stationary.len() != n {
            return Err(Error::InvalidInput(
                "kernel/stationary size does not match admissible state count".into(),
            ));
        }
        let m = sft.alphabet_size();
        let state_index: BTreeMap<Vec<u8>, usize> = states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols().to_vec(), i))
            .collect();
        for (s, row) in kernel.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput("kernel row has wrong arity".into()));
            }
            let mut sum = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !(0.0..=1.0 + 1e-12).contains(&p) {
                    return Err(Error::InvalidInput("kernel entry outside [0,1]".into()));
                }
                if p > 0.0 && successor_state(&states[s], a as u8, sft).is_none() {
                    return Err(Error::InvalidInput(
                        "kernel puts mass on a forbidden transition".into(),
                    ));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "kernel row {s} sums to {sum}, not 1"
                )));
            }
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > 1e-10 || stationary.iter().any(|&p| p < -1e-15) {
            return Err(Error::InvalidInput("stationary vector is not a distribution".into()));
        }
        // Invariance check.
        let mut pushed = vec![0.0; n];
        for s in 0..n {
            for a in 0..m {
                let p = kernel[s][a];
                if p > 0.0 {
                    let t = state_index[&shifted_state(&states[s], a as u8)];
                    pushed[t] += stationary[s] * p;
                }
            }
        }
        for s in 0..n {
            if (pushed[s] - stationary[s]).abs() > 1e-10 {
                return Err(Error::InvalidInput(
                    "stationary vector is not invariant under the kernel".into(),
                ));
            }
        }
        Ok(Self {
            order,
            states,
            state_index,
            kernel,
            stationary,
        })
    }

    /// Product measure with `P(symbol a) = probs[a]` on a full shift.
    pub fn bernoulli(sft: &Sft, probs: &[f64]) -> Result<Self> {
        let m = sft.alphabet_size();
        if probs.len() != m {
            return Err(Error::InvalidInput("need one probability per symbol".into()));
        }
        let kernel = vec![probs.to_vec(); m];
        Self::new(sft, 1, kernel, probs.to_vec())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Entropy via the stationary-kernel formula
    /// `h = -sum_w pi_w sum_a p(w,a) log p(w,a)`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (s, row) in self.kernel.iter().enumerate() {
            let mut hs = 0.0;
            for &p in row {
                hs -= xlogx(p);
            }
            h += self.stationary[s] * hs;
        }
        h
    }

    /// Exact integral of a locally constant potential of any depth: cylinder
    /// probabilities of words longer than the order follow from the Markov
    /// property.
    pub fn integral(&self, sft: &Sft, pot: &LocallyConstantPotential) -> f64 {
        let depth = pot.depth().max(self.order);
        let pot = pot
            .lift(sft, depth)
            .expect("lift within enumeration limits");
        let mut acc = 0.0;
        visit_words(sft, depth, DEFAULT_MAX_WORDS, |w| {
            let mu = self.cylinder_probability(w);
            if mu > 0.0 {
                acc += mu * pot.value(w);
            }
        })
        .expect("depth enumeration below cap");
        acc
    }

    /// Probability of the cylinder of `word` (length >= order).
    pub fn cylinder_probability(&self, word: &[u8]) -> f64 {
        debug_assert!(word.len() >= self.order);
        let mut state = self.state_index[&word[..self.order].to_vec()];
        let mut p = self.stationary[state];
        for &a in &word[self.order..] {
            if p == 0.0 {
                return 0.0;
            }
            p *= self.kernel[state][a as usize];
            state = self.state_index[&shifted_state(&self.states[state], a)];
        }
        p
    }
}

fn shifted_state(state: &Word, appended: u8) -> Vec<u8> {
    let mut s = state.symbols()[1..].to_vec();
    s.push(appended);
    if s.is_empty() {
        vec![appended]
    } else {
        s
    }
}

fn successor_state(state: &Word, appended: u8, sft: &Sft) -> Option<Vec<u8>> {
    let last = *state.symbols().last().unwrap();
    if !sft.allowed(last, appended) {
        return None;
    }
    Some(shifted_state(state, appended))
}

pub(crate) fn xlogx(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// Entropy and integral of `phi` under `mu`.
pub fn markov_stats(sft: &Sft, mu: &MarkovMeasure, phi: &LocallyConstantPotential) -> (f64, f64) {
    (mu.entropy(), mu.integral(sft, phi))
}
