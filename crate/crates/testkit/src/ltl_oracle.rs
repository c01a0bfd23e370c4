//! Exhaustive check of formula progression against the trace semantics.
//!
//! The alphabet has six letters: a mode (walk or bike) paired with one of
//! three bike-time levels. For every word length `n`, the satisfaction set
//! of a formula is tabulated as one bit per (position, word), computed
//! bottom-up from the semantics of each connective. Words of one length are
//! numbered with the first letter most significant, so all extensions of a
//! prefix occupy one contiguous index range.

use tripplan_core::ltl::{parse, progress_unchecked, Atom, LtlFormula, StateSnapshot, Verdict};
use tripplan_core::mode::Mode;
use tripplan_core::pcf::StateVars;

pub const LETTERS: usize = 6;
const LEVELS: [u32; 3] = [0, 100, 200];

pub fn letter_state(letter: usize) -> StateSnapshot {
    let mode = [Mode::Walk, Mode::Bike][letter / 3];
    let mut vars = StateVars::empty(&[]);
    vars.time_s[Mode::Bike.index()] = LEVELS[letter % 3];
    StateSnapshot {
        mode: Some(mode),
        vars,
        aux_here: Vec::new(),
    }
}

/// The atoms the exhaustive check is built from.
pub fn alphabet_atoms() -> Vec<LtlFormula> {
    ["mode=walk", "mode=bike", "time(bike) >= 100", "time(bike) = 200"]
        .iter()
        .map(|s| parse(s).expect("alphabet atoms parse"))
        .collect()
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn ones(len: usize) -> Self {
        let mut b = Bits(vec![u64::MAX; len.div_ceil(64)]);
        b.trim(len);
        b
    }

    fn trim(&mut self, len: usize) {
        let rem = len % 64;
        if rem != 0 {
            *self.0.last_mut().unwrap() &= (1u64 << rem) - 1;
        }
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn zip(&self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    fn not(&self, len: usize) -> Bits {
        let mut b = Bits(self.0.iter().map(|w| !w).collect());
        b.trim(len);
        b
    }

    /// Whether every bit in `lo..hi` equals `value`.
    fn range_is(&self, lo: usize, hi: usize, value: bool) -> bool {
        (lo..hi).all(|i| self.get(i) == value)
    }
}

/// Satisfaction of one formula over all words of lengths `1..=max_len`:
/// `lens[n - 1][i]` has bit `w` set iff word `w` satisfies the formula at
/// position `i`.
#[derive(Clone)]
pub struct SatTable {
    lens: Vec<Vec<Bits>>,
}

/// Precomputed per-letter masks.
pub struct Universe {
    max_len: usize,
    // letter_at[n - 1][i][l]: words of length n whose letter i is l
    letter_at: Vec<Vec<Vec<Bits>>>,
}

impl Universe {
    pub fn new(max_len: usize) -> Self {
        let letter_at = (1..=max_len)
            .map(|n| {
                let words = LETTERS.pow(n as u32);
                (0..n)
                    .map(|i| {
                        let mut masks = vec![Bits::zeros(words); LETTERS];
                        let place = LETTERS.pow((n - 1 - i) as u32);
                        for w in 0..words {
                            masks[(w / place) % LETTERS].set(w);
                        }
                        masks
                    })
                    .collect()
            })
            .collect();
        Universe { max_len, letter_at }
    }

    fn words(n: usize) -> usize {
        LETTERS.pow(n as u32)
    }

    pub fn table(&self, f: &LtlFormula) -> SatTable {
        match f {
            LtlFormula::True => self.constant(true),
            LtlFormula::False => self.constant(false),
            LtlFormula::Atom(a) => self.atom(a),
            LtlFormula::Not(x) => self.not(&self.table(x)),
            LtlFormula::And(a, b) => self.and(&self.table(a), &self.table(b)),
            LtlFormula::Or(a, b) => self.or(&self.table(a), &self.table(b)),
            LtlFormula::Next(x) => self.next(&self.table(x)),
            LtlFormula::Always(x) => self.always(&self.table(x)),
            LtlFormula::Eventually(x) => self.eventually(&self.table(x)),
            LtlFormula::After(a, b) => self.after(&self.table(a), &self.table(b)),
        }
    }

    fn build(&self, mut f: impl FnMut(usize, usize) -> Bits) -> SatTable {
        SatTable {
            lens: (1..=self.max_len).map(|n| (0..n).map(|i| f(n, i)).collect()).collect(),
        }
    }

    fn constant(&self, v: bool) -> SatTable {
        self.build(|n, _| if v { Bits::ones(Self::words(n)) } else { Bits::zeros(Self::words(n)) })
    }

    fn atom(&self, a: &Atom) -> SatTable {
        let holds: Vec<bool> = (0..LETTERS).map(|l| a.holds(&letter_state(l))).collect();
        self.build(|n, i| {
            let mut acc = Bits::zeros(Self::words(n));
            for (l, _) in holds.iter().enumerate().filter(|(_, &h)| h) {
                acc = acc.zip(&self.letter_at[n - 1][i][l], |x, y| x | y);
            }
            acc
        })
    }

    pub fn not(&self, x: &SatTable) -> SatTable {
        self.build(|n, i| x.lens[n - 1][i].not(Self::words(n)))
    }

    pub fn and(&self, a: &SatTable, b: &SatTable) -> SatTable {
        self.build(|n, i| a.lens[n - 1][i].zip(&b.lens[n - 1][i], |x, y| x & y))
    }

    pub fn or(&self, a: &SatTable, b: &SatTable) -> SatTable {
        self.build(|n, i| a.lens[n - 1][i].zip(&b.lens[n - 1][i], |x, y| x | y))
    }

    pub fn next(&self, x: &SatTable) -> SatTable {
        self.build(|n, i| {
            if i + 1 < n {
                x.lens[n - 1][i + 1].clone()
            } else {
                Bits::zeros(Self::words(n))
            }
        })
    }

    /// Suffix fold from the last position backwards.
    fn backwards(&self, last: impl Fn(usize, usize) -> Bits, step: impl Fn(usize, usize, &Bits) -> Bits) -> SatTable {
        SatTable {
            lens: (1..=self.max_len)
                .map(|n| {
                    let mut out = vec![last(n, n - 1)];
                    for i in (0..n - 1).rev() {
                        let next = step(n, i, out.last().unwrap());
                        out.push(next);
                    }
                    out.reverse();
                    out
                })
                .collect(),
        }
    }

    pub fn always(&self, x: &SatTable) -> SatTable {
        self.backwards(
            |n, i| x.lens[n - 1][i].clone(),
            |n, i, later| x.lens[n - 1][i].zip(later, |a, b| a & b),
        )
    }

    pub fn eventually(&self, x: &SatTable) -> SatTable {
        self.backwards(
            |n, i| x.lens[n - 1][i].clone(),
            |n, i, later| x.lens[n - 1][i].zip(later, |a, b| a | b),
        )
    }

    /// Holds at `i` iff for all `j` in `i..n-1`, `a` at `j` implies `b` at `j+1`.
    pub fn after(&self, a: &SatTable, b: &SatTable) -> SatTable {
        self.backwards(
            |n, _| Bits::ones(Self::words(n)),
            |n, i, later| {
                let implied = a.lens[n - 1][i]
                    .not(Self::words(n))
                    .zip(&b.lens[n - 1][i + 1], |x, y| x | y);
                implied.zip(later, |x, y| x & y)
            },
        )
    }
}

impl SatTable {
    /// Whether word `w` of length `n` satisfies the formula.
    pub fn holds(&self, n: usize, w: usize) -> bool {
        self.lens[n - 1][0].get(w)
    }
}

/// Result of an exhaustive progression check.
#[derive(Debug, Default, Clone)]
pub struct SoundnessReport {
    pub formulas: usize,
    pub prefixes: usize,
    /// A `False` verdict with a satisfying extension.
    pub false_counterexamples: usize,
    /// A `True` verdict with a violating extension.
    pub true_counterexamples: usize,
    /// Final verdicts disagreeing with the semantics.
    pub final_mismatches: usize,
    pub examples: Vec<String>,
}

impl SoundnessReport {
    pub fn is_clean(&self) -> bool {
        self.false_counterexamples == 0 && self.true_counterexamples == 0 && self.final_mismatches == 0
    }
}

/// Checks every formula of depth at most 3 over [`alphabet_atoms`], every
/// prefix of length at most `max_prefix`, against all extensions up to
/// `max_len` letters.
pub fn check_depth3(max_prefix: usize, max_len: usize) -> SoundnessReport {
    let uni = Universe::new(max_len);
    let states: Vec<StateSnapshot> = (0..LETTERS).map(letter_state).collect();

    let mut level1 = vec![LtlFormula::True, LtlFormula::False];
    level1.extend(alphabet_atoms());
    let mut upto2 = level1.clone();
    for x in &level1 {
        upto2.extend([
            LtlFormula::not(x.clone()),
            LtlFormula::next(x.clone()),
            LtlFormula::always(x.clone()),
            LtlFormula::eventually(x.clone()),
        ]);
    }
    for a in &level1 {
        for b in &level1 {
            upto2.extend([
                LtlFormula::and(a.clone(), b.clone()),
                LtlFormula::or(a.clone(), b.clone()),
                LtlFormula::after(a.clone(), b.clone()),
            ]);
        }
    }
    let tables: Vec<SatTable> = upto2.iter().map(|f| uni.table(f)).collect();

    let mut report = SoundnessReport::default();
    let check = |f: &LtlFormula, t: &SatTable, report: &mut SoundnessReport| {
        report.formulas += 1;
        check_formula(f, t, &states, max_prefix, max_len, report);
    };
    for (f, t) in upto2.iter().zip(&tables) {
        check(f, t, &mut report);
    }
    for (x, tx) in upto2.iter().zip(&tables) {
        check(&LtlFormula::not(x.clone()), &uni.not(tx), &mut report);
        check(&LtlFormula::next(x.clone()), &uni.next(tx), &mut report);
        check(&LtlFormula::always(x.clone()), &uni.always(tx), &mut report);
        check(&LtlFormula::eventually(x.clone()), &uni.eventually(tx), &mut report);
    }
    for (a, ta) in upto2.iter().zip(&tables) {
        for (b, tb) in upto2.iter().zip(&tables) {
            check(&LtlFormula::and(a.clone(), b.clone()), &uni.and(ta, tb), &mut report);
            check(&LtlFormula::or(a.clone(), b.clone()), &uni.or(ta, tb), &mut report);
            if a.is_state_formula() {
                check(&LtlFormula::after(a.clone(), b.clone()), &uni.after(ta, tb), &mut report);
            }
        }
    }
    report
}

/// Progresses `f` along every prefix and compares each verdict with the
/// tabulated semantics.
pub fn check_formula(
    f: &LtlFormula,
    table: &SatTable,
    states: &[StateSnapshot],
    max_prefix: usize,
    max_len: usize,
    report: &mut SoundnessReport,
) {
    // (residual before the last letter, prefix length, prefix index)
    let mut stack = vec![(f.clone(), 0usize, 0usize)];
    while let Some((residual, len, index)) = stack.pop() {
        for (letter, state) in states.iter().enumerate() {
            let plen = len + 1;
            let p = index * LETTERS + letter;
            report.prefixes += 1;

            let fin = progress_unchecked(&residual, state, true).verdict;
            if (fin == Verdict::True) != table.holds(plen, p) {
                report.final_mismatches += 1;
                note(report, f, plen, p, "final verdict");
            }

            let next = progress_unchecked(&residual, state, false);
            match next.verdict {
                Verdict::False | Verdict::True => {
                    let want = next.verdict == Verdict::True;
                    for n in plen + 1..=max_len {
                        let span = LETTERS.pow((n - plen) as u32);
                        if !table.lens[n - 1][0].range_is(p * span, (p + 1) * span, want) {
                            if want {
                                report.true_counterexamples += 1;
                            } else {
                                report.false_counterexamples += 1;
                            }
                            note(report, f, plen, p, "verdict");
                            break;
                        }
                    }
                }
                Verdict::Pending => {
                    if plen < max_prefix {
                        stack.push((next.residual, plen, p));
                    }
                }
            }
        }
    }
}

fn note(report: &mut SoundnessReport, f: &LtlFormula, len: usize, p: usize, what: &str) {
    if report.examples.len() < 10 {
        let mut letters = Vec::new();
        let mut rest = p;
        for _ in 0..len {
            letters.push(rest % LETTERS);
            rest /= LETTERS;
        }
        letters.reverse();
        report.examples.push(format!("{what}: {f} on letters {letters:?}"));
    }
}
