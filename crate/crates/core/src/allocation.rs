//! Resource assignment over the (user, RB, configuration) grid.
//!
//! Two objectives: max-rate (per-resource argmax, exact) and max-min (a
//! two-phase greedy that first guarantees every user one resource, then
//! repeatedly feeds the currently poorest user). Both run either jointly
//! over the full grid or sequentially after a nearest-beam slot
//! partition. All tie-breaks are lowest-index so runs are reproducible.
//!
//! Resources are indexed config-major: `a = c * F + f`.

use std::io::Write;

use crate::codebook::Codebook;
use crate::geometry::PolarPosition;
use crate::robust_rate::RateTensor;
use crate::{Error, Result};

/// Aggregated per-user spectral efficiency in bit/s/Hz.
pub type UserRates = Vec<f64>;

/// Scheduling objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxRate,
    MaxMin,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::MaxRate => "max_rate",
            Objective::MaxMin => "max_min",
        })
    }
}

/// Binary assignment of users to (RB, configuration) resources.
///
/// Invariant: at most one user per resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationMatrix {
    pub n_users: usize,
    pub n_rb: usize,
    pub n_configs: usize,
    /// Owner user index per (f, c) resource, or `None` if unassigned.
    owner: Vec<Option<usize>>,
}

impl AllocationMatrix {
    pub fn empty(n_users: usize, n_rb: usize, n_configs: usize) -> Self {
        Self {
            n_users,
            n_rb,
            n_configs,
            owner: vec![None; n_rb * n_configs],
        }
    }

    #[inline]
    fn slot(&self, f: usize, c: usize) -> usize {
        c * self.n_rb + f
    }

    pub fn owner_of(&self, f: usize, c: usize) -> Option<usize> {
        self.owner[self.slot(f, c)]
    }

    pub fn assign(&mut self, k: usize, f: usize, c: usize) {
        let s = self.slot(f, c);
        debug_assert!(self.owner[s].is_none(), "resource double-assigned");
        self.owner[s] = Some(k);
    }

    pub fn is_assigned(&self, k: usize, f: usize, c: usize) -> bool {
        self.owner_of(f, c) == Some(k)
    }

    /// Number of resources held by user `k`.
    pub fn count_for(&self, k: usize) -> usize {
        self.owner.iter().filter(|&&o| o == Some(k)).count()
    }

    /// Slot-by-RB grid CSV; each cell holds the owning user index or -1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "config")?;
        for f in 0..self.n_rb {
            write!(w, ",rb_{f}")?;
        }
        writeln!(w)?;
        for c in 0..self.n_configs {
            write!(w, "{}", c + 1)?;
            for f in 0..self.n_rb {
                match self.owner_of(f, c) {
                    Some(k) => write!(w, ",{k}")?,
                    None => write!(w, ",-1")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Per-resource argmax over users; exact for the separable sum objective.
pub fn max_rate_allocate(rates: &RateTensor) -> AllocationMatrix {
    let mut alloc = AllocationMatrix::empty(rates.n_users, rates.n_rb, rates.n_configs);
    for c in 0..rates.n_configs {
        for f in 0..rates.n_rb {
            let mut best = 0usize;
            for k in 1..rates.n_users {
                if rates.get(k, f, c) > rates.get(best, f, c) {
                    best = k;
                }
            }
            alloc.assign(best, f, c);
        }
    }
    alloc
}

/// Two-phase max-min greedy over all users and all resources.
pub fn max_min_allocate(rates: &RateTensor) -> Result<AllocationMatrix> {
    let users: Vec<usize> = (0..rates.n_users).collect();
    let resources: Vec<(usize, usize)> = resource_order(rates.n_rb, rates.n_configs);
    max_min_greedy(rates, &users, &resources)
}

/// Resources in config-major order.
fn resource_order(n_rb: usize, n_configs: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_rb * n_configs);
    for c in 0..n_configs {
        for f in 0..n_rb {
            out.push((f, c));
        }
    }
    out
}

/// Shared greedy core: phase 1 gives each user its best remaining
/// resource in user-index order, phase 2 feeds the poorest user until the
/// resources run out.
fn max_min_greedy(
    rates: &RateTensor,
    users: &[usize],
    resources: &[(usize, usize)],
) -> Result<AllocationMatrix> {
    if resources.len() < users.len() {
        return Err(Error::Infeasible(format!(
            "max-min needs at least one resource per user: {} users, {} resources",
            users.len(),
            resources.len()
        )));
    }
    let mut alloc = AllocationMatrix::empty(rates.n_users, rates.n_rb, rates.n_configs);
    let mut remaining: Vec<(usize, usize)> = resources.to_vec();
    let mut totals = vec![0.0f64; rates.n_users];

    let take_best = |rem: &mut Vec<(usize, usize)>, k: usize| -> (usize, usize) {
        let mut best = 0usize;
        for i in 1..rem.len() {
            let (f, c) = rem[i];
            let (bf, bc) = rem[best];
            if rates.get(k, f, c) > rates.get(k, bf, bc) {
                best = i;
            }
        }
        rem.remove(best)
    };

    for &k in users {
        let (f, c) = take_best(&mut remaining, k);
        alloc.assign(k, f, c);
        totals[k] += rates.get(k, f, c);
    }
    while !remaining.is_empty() {
        let poorest = users
            .iter()
            .copied()
            .min_by(|&a, &b| totals[a].partial_cmp(&totals[b]).unwrap())
            .expect("non-empty user set");
        let (f, c) = take_best(&mut remaining, poorest);
        alloc.assign(poorest, f, c);
        totals[poorest] += rates.get(poorest, f, c);
    }
    Ok(alloc)
}

/// Nearest-beam-center slot binding for each user, ties to the lower
/// configuration index.
pub fn assign_configs(users: &[PolarPosition], codebook: &Codebook) -> Result<Vec<usize>> {
    if codebook.is_empty() {
        return Err(Error::InvalidArgument("empty codebook".into()));
    }
    Ok(users
        .iter()
        .map(|u| {
            let mut best = 0usize;
            let mut best_d = (codebook.configs[0].center_azimuth - u.azimuth).abs();
            for (c, cfg) in codebook.configs.iter().enumerate().skip(1) {
                let d = (cfg.center_azimuth - u.azimuth).abs();
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Per-slot allocation after the nearest-beam partition.
///
/// Each configuration's RBs are shared only among the users bound to that
/// configuration; slots with no users stay unassigned.
pub fn sequential_allocate(
    rates: &RateTensor,
    partition: &[usize],
    objective: Objective,
) -> Result<AllocationMatrix> {
    if partition.len() != rates.n_users {
        return Err(Error::InvalidArgument(format!(
            "partition length {} does not match user count {}",
            partition.len(),
            rates.n_users
        )));
    }
    let mut alloc = AllocationMatrix::empty(rates.n_users, rates.n_rb, rates.n_configs);
    for c in 0..rates.n_configs {
        let members: Vec<usize> = (0..rates.n_users).filter(|&k| partition[k] == c).collect();
        if members.is_empty() {
            continue;
        }
        match objective {
            Objective::MaxRate => {
                for f in 0..rates.n_rb {
                    let mut best = members[0];
                    for &k in &members[1..] {
                        if rates.get(k, f, c) > rates.get(best, f, c) {
                            best = k;
                        }
                    }
                    alloc.assign(best, f, c);
                }
            }
            Objective::MaxMin => {
                if members.len() > rates.n_rb {
                    return Err(Error::Infeasible(format!(
                        "slot {} holds {} users but only {} RBs",
                        c + 1,
                        members.len(),
                        rates.n_rb
                    )));
                }
                let resources: Vec<(usize, usize)> =
                    (0..rates.n_rb).map(|f| (f, c)).collect();
                let slot_alloc = max_min_greedy(rates, &members, &resources)?;
                for f in 0..rates.n_rb {
                    if let Some(k) = slot_alloc.owner_of(f, c) {
                        alloc.assign(k, f, c);
                    }
                }
            }
        }
    }
    Ok(alloc)
}

/// Runs the chosen objective jointly over the whole grid.
pub fn allocate(rates: &RateTensor, objective: Objective) -> Result<AllocationMatrix> {
    match objective {
        Objective::MaxRate => Ok(max_rate_allocate(rates)),
        Objective::MaxMin => max_min_allocate(rates),
    }
}

/// Aggregates the allocated per-resource rates into per-user totals.
pub fn user_rates(rates: &RateTensor, alloc: &AllocationMatrix) -> Result<UserRates> {
    if (alloc.n_users, alloc.n_rb, alloc.n_configs)
        != (rates.n_users, rates.n_rb, rates.n_configs)
    {
        return Err(Error::InvalidArgument(
            "allocation and rate tensor shapes differ".into(),
        ));
    }
    let mut totals = vec![0.0f64; rates.n_users];
    for c in 0..rates.n_configs {
        for f in 0..rates.n_rb {
            if let Some(k) = alloc.owner_of(f, c) {
                totals[k] += rates.get(k, f, c);
            }
        }
    }
    Ok(totals)
}
