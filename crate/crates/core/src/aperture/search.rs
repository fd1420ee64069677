//! Exhaustive and hill-climbing search over binary codewords.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    bits_to_mask, mask_to_bits, msequence, peak_ratio, ApertureCode, CodeScore, MaskScorer,
    ObjectiveKind, DEFAULT_HEIGHT_MM, DEFAULT_PITCH_UM,
};
use crate::error::{ensure_arg, Result};
use crate::exec::Execution;

/// Largest code length searched exhaustively without an override.
pub const EXHAUSTIVE_DEFAULT_MAX: usize = 24;
/// Hard limit with the override (masks are 64-bit; 2^32 is already days).
pub const EXHAUSTIVE_FORCE_MAX: usize = 32;

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub n: usize,
    pub nl: usize,
    pub alpha: f64,
    pub kind: ObjectiveKind,
    pub band_limit_lags: Option<usize>,
}

impl SearchConfig {
    pub fn new(n: usize, nl: usize, alpha: f64, kind: ObjectiveKind) -> Self {
        SearchConfig {
            n,
            nl,
            alpha,
            kind,
            band_limit_lags: None,
        }
    }

    fn scorer(&self) -> Result<MaskScorer> {
        MaskScorer::new(self.n, self.nl, self.alpha, self.band_limit_lags, self.kind)
    }
}

/// Total order used to pick winners: objective (rounded to 1e-9 so that
/// mirror-image codes tie), then throughput, then the lexicographically
/// smallest bit string `a_0 a_1 …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Rank {
    objective: i64,
    throughput: usize,
    lex: std::cmp::Reverse<u64>,
}

fn rank(mask: u64, n: usize, score: &CodeScore) -> Rank {
    let lex = (0..n).fold(0u64, |acc, i| (acc << 1) | ((mask >> i) & 1));
    Rank {
        objective: (score.objective * 1e9).round() as i64,
        throughput: score.throughput,
        lex: std::cmp::Reverse(lex),
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    rank: Rank,
    mask: u64,
    score: CodeScore,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.rank > a.rank {
        b
    } else {
        a
    }
}

fn finish(cfg: &SearchConfig, best: Candidate) -> Result<(ApertureCode, CodeScore)> {
    let bits = mask_to_bits(best.mask, cfg.n);
    let mut score = best.score;
    if score.peak_ratio.is_nan() {
        score.peak_ratio = peak_ratio(&bits);
    }
    Ok((
        ApertureCode::new(bits, DEFAULT_PITCH_UM, DEFAULT_HEIGHT_MM)?,
        score,
    ))
}

pub fn search_code_exhaustive(cfg: &SearchConfig) -> Result<(ApertureCode, CodeScore)> {
    search_code_exhaustive_with(cfg, false, Execution::default())
}

/// Scores all `2^N − 1` nonzero codewords. `force` lifts the default size
/// cap up to [`EXHAUSTIVE_FORCE_MAX`].
pub fn search_code_exhaustive_with(
    cfg: &SearchConfig,
    force: bool,
    exec: Execution,
) -> Result<(ApertureCode, CodeScore)> {
    let cap = if force {
        EXHAUSTIVE_FORCE_MAX
    } else {
        EXHAUSTIVE_DEFAULT_MAX
    };
    ensure_arg!(
        cfg.n >= 1 && cfg.n <= cap,
        "exhaustive search over N = {} exceeds the limit of {cap}; use the heuristic search{}",
        cfg.n,
        if force { "" } else { " or force the exhaustive run" }
    );
    let scorer = cfg.scorer()?;
    let n = cfg.n;
    let total = 1u64 << n;
    let best = exec.fold_blocks(
        total - 1,
        4096,
        |lo, hi| {
            (lo..hi)
                .map(|i| {
                    let mask = i + 1;
                    let score = scorer.score(mask);
                    Candidate {
                        rank: rank(mask, n, &score),
                        mask,
                        score,
                    }
                })
                .reduce(better)
        },
        better,
    );
    finish(cfg, best.expect("at least one candidate"))
}

pub fn search_code_heuristic(
    cfg: &SearchConfig,
    restarts: usize,
    flips: usize,
    seed: u64,
) -> Result<(ApertureCode, CodeScore)> {
    search_code_heuristic_with(cfg, restarts, flips, seed, Execution::default())
}

fn msequence_start(n: usize) -> u64 {
    let degree = (2..=16u32).find(|d| (1usize << d) - 1 >= n).unwrap_or(16);
    let s = msequence(degree).expect("supported degree");
    bits_to_mask(&s[..n.min(s.len())])
}

/// Steepest-ascent hill climbing from one M-sequence start and
/// `restarts − 1` random starts; at most `flips` moves per start. Each move
/// takes the best single-bit flip, falling back to the best pair of flips
/// when no single flip improves.
pub fn search_code_heuristic_with(
    cfg: &SearchConfig,
    restarts: usize,
    flips: usize,
    seed: u64,
    exec: Execution,
) -> Result<(ApertureCode, CodeScore)> {
    ensure_arg!(restarts >= 1, "restarts must be at least 1");
    ensure_arg!(flips >= 1, "flips must be at least 1");
    ensure_arg!(cfg.n >= 1 && cfg.n <= 64, "code length {} outside 1..=64", cfg.n);
    let scorer = cfg.scorer()?;
    let n = cfg.n;
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let climb = |r: usize| -> Candidate {
        let start = if r == 0 {
            msequence_start(n)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let m = rng.random::<u64>() & full;
            if m == 0 {
                1
            } else {
                m
            }
        };
        let eval = |mask: u64| {
            let score = scorer.score(mask);
            Candidate {
                rank: rank(mask, n, &score),
                mask,
                score,
            }
        };
        let mut cur = eval(start);
        for _ in 0..flips {
            let single = (0..n)
                .map(|b| cur.mask ^ (1u64 << b))
                .filter(|&m| m != 0)
                .map(eval)
                .reduce(better);
            if let Some(c) = single.filter(|c| c.rank > cur.rank) {
                cur = c;
                continue;
            }
            // stuck under single flips: widen to pairs before giving up
            let pair = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (1u64 << a) | (1u64 << b)))
                .map(|f| cur.mask ^ f)
                .filter(|&m| m != 0)
                .map(eval)
                .reduce(better);
            match pair {
                Some(c) if c.rank > cur.rank => cur = c,
                _ => break,
            }
        }
        cur
    };
    let results = exec.map_indices(restarts, climb);
    let best = results.into_iter().reduce(better).expect("restarts >= 1");
    finish(cfg, best)
}
