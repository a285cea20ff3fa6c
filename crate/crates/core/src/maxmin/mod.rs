//! Weighted max-min fair allocation.
//!
//! Players request shares `x_j >= 0` (possibly infinite) of a resource
//! `X >= 0` and carry positive weights `phi_j`. The fair share `f` is the
//! water level at which small requests are met in full and large requests
//! receive `phi_j * f`; it equals the maximum over all player subsets `M` of
//! `(X - sum_{j in M} x_j) / sum_{j not in M} phi_j`, with the convention
//! that for `M` equal to the full set the fraction is `+inf` when the
//! numerator is nonnegative and `-inf` otherwise. The implementation
//! water-fills in `O(n log n)`; the subset form is kept as a brute-force
//! oracle in [`crate::oracle`].

use crate::rational::{Ext, Q};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaxminError {
    #[error("weight of player {0} must be positive")]
    NonpositiveWeight(usize),
    #[error("request of player {0} must be nonnegative")]
    NegativeRequest(usize),
    #[error("resource must be nonnegative, got {0}")]
    NegativeResource(Q),
    #[error("unknown player {0}")]
    UnknownPlayer(usize),
    #[error("resource must be positive for feasibility checks, got {0}")]
    NonpositiveResource(Q),
    #[error("requests are not a feasible subset")]
    InfeasibleRequests,
    #[error("order is not a permutation of the player set")]
    NotAPermutation,
}

/// Weighted allocation problem: players are indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationProblem {
    weights: Vec<Q>,
    requests: Vec<Ext>,
    resource: Q,
}

impl AllocationProblem {
    pub fn new(weights: Vec<Q>, requests: Vec<Ext>, resource: Q) -> Result<Self, MaxminError> {
        assert_eq!(weights.len(), requests.len(), "one request per player");
        for (j, w) in weights.iter().enumerate() {
            if !w.is_positive() {
                return Err(MaxminError::NonpositiveWeight(j));
            }
        }
        for (j, x) in requests.iter().enumerate() {
            let negative = match x {
                Ext::NegInf => true,
                Ext::Finite(v) => v.is_negative(),
                Ext::PosInf => false,
            };
            if negative {
                return Err(MaxminError::NegativeRequest(j));
            }
        }
        if resource.is_negative() {
            return Err(MaxminError::NegativeResource(resource));
        }
        Ok(AllocationProblem {
            weights,
            requests,
            resource,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn requests(&self) -> &[Ext] {
        &self.requests
    }

    pub fn resource(&self) -> &Q {
        &self.resource
    }

    /// Same problem with player `i`'s request replaced.
    pub fn with_request(&self, i: usize, x: Ext) -> Result<Self, MaxminError> {
        if i >= self.len() {
            return Err(MaxminError::UnknownPlayer(i));
        }
        let mut requests = self.requests.clone();
        requests[i] = x;
        AllocationProblem::new(self.weights.clone(), requests, self.resource.clone())
    }
}

/// Outcome of [`allocate`]. Shares are always finite; unmet demand is
/// infinite exactly for players with infinite requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationResult {
    pub fair_share: Ext,
    pub shares: Vec<Q>,
    pub unmet: Vec<Ext>,
    pub satisfied: BTreeSet<usize>,
}

/// The fair share of the problem, `+inf` iff the total request does not
/// exceed the resource (in particular for an empty player set).
pub fn fair_share(p: &AllocationProblem) -> Ext {
    // water-filling: absorb players in request-to-weight order while their
    // request fits under the rising level
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| cmp_ratio(&p.requests[a], &p.weights[a], &p.requests[b], &p.weights[b]));
    let mut remaining = p.resource.clone();
    let mut weight_left: Q = p.weights.iter().sum();
    for &j in &order {
        match &p.requests[j] {
            Ext::Finite(x) if x * &weight_left <= &p.weights[j] * &remaining => {
                remaining -= x;
                weight_left -= &p.weights[j];
            }
            _ => break,
        }
    }
    if weight_left.is_zero() {
        Ext::PosInf
    } else {
        Ext::Finite(remaining / weight_left)
    }
}

fn cmp_ratio(xa: &Ext, wa: &Q, xb: &Ext, wb: &Q) -> std::cmp::Ordering {
    match (xa, xb) {
        (Ext::PosInf, Ext::PosInf) => std::cmp::Ordering::Equal,
        (Ext::PosInf, _) => std::cmp::Ordering::Greater,
        (_, Ext::PosInf) => std::cmp::Ordering::Less,
        (Ext::Finite(a), Ext::Finite(b)) => (a * wb).cmp(&(b * wa)),
        _ => unreachable!("requests are nonnegative"),
    }
}

/// Max-min fair allocation: `y_j = min(x_j, phi_j * f)`, unmet demand
/// `x_j - y_j`, and the satisfied set `{j : x_j <= phi_j * f}`.
pub fn allocate(p: &AllocationProblem) -> AllocationResult {
    let f = fair_share(p);
    let mut shares = Vec::with_capacity(p.len());
    let mut unmet = Vec::with_capacity(p.len());
    let mut satisfied = BTreeSet::new();
    for j in 0..p.len() {
        let cap = f.scale_pos(&p.weights[j]);
        let (y, leftover, sat) = match (&p.requests[j], &cap) {
            (Ext::Finite(x), Ext::Finite(c)) => {
                let y = x.min(c).clone();
                (y.clone(), Ext::Finite(x - &y), x <= c)
            }
            (Ext::Finite(x), Ext::PosInf) => (x.clone(), Ext::Finite(Q::zero()), true),
            (Ext::PosInf, Ext::Finite(c)) => (c.clone(), Ext::PosInf, false),
            (Ext::PosInf, Ext::PosInf) => {
                unreachable!("an infinite request forces a finite fair share")
            }
            (Ext::NegInf, _) | (_, Ext::NegInf) => unreachable!("requests and shares nonnegative"),
        };
        if sat {
            satisfied.insert(j);
        }
        shares.push(y);
        unmet.push(leftover);
    }
    AllocationResult {
        fair_share: f,
        shares,
        unmet,
        satisfied,
    }
}

/// Per-player fair bound `f_i`: the maximum over subsets avoiding `i` of
/// `(phi_i / sum_{j not in M} phi_j) (X - sum_{j in M} x_j)`, computed by
/// masking `x_i` to `+inf` (the mask keeps exactly the subsets avoiding `i`
/// alive in the maximum). Always finite; `min(x_i, f_i)` equals player `i`'s
/// allocated share.
pub fn per_player_share(p: &AllocationProblem, i: usize) -> Result<Q, MaxminError> {
    let masked = p.with_request(i, Ext::PosInf)?;
    let f = fair_share(&masked);
    let f = f.expect_finite("fair share with an infinite request present");
    Ok(f * &p.weights[i])
}

/// Definition of a feasible subset: requests `(x_j)_{j in M}` (keys of
/// `requests`) are feasible for resource `X > 0` iff
/// `max_{j in M} x_j/phi_j <= (X - sum_M x_j) / sum_{not M} phi_j`,
/// understanding the full set as `sum x_j <= X` and the empty set as
/// trivially feasible.
pub fn is_feasible(
    weights: &[Q],
    requests: &BTreeMap<usize, Q>,
    resource: &Q,
) -> Result<bool, MaxminError> {
    if !resource.is_positive() {
        return Err(MaxminError::NonpositiveResource(resource.clone()));
    }
    for (&j, x) in requests {
        if j >= weights.len() {
            return Err(MaxminError::UnknownPlayer(j));
        }
        if x.is_negative() {
            return Err(MaxminError::NegativeRequest(j));
        }
    }
    if requests.is_empty() {
        return Ok(true);
    }
    let total: Q = requests.values().sum();
    let outside: Q = weights
        .iter()
        .enumerate()
        .filter(|(j, _)| !requests.contains_key(j))
        .map(|(_, w)| w)
        .sum();
    if outside.is_zero() {
        return Ok(total <= *resource);
    }
    let slack = resource - &total;
    // max ratio <= slack / outside, compared without division
    Ok(requests
        .iter()
        .all(|(j, x)| x * &outside <= &slack * &weights[*j]))
}

/// Removal order from repeatedly deleting a maximal-ratio player (ties to
/// the smallest id). Every prefix-complement along the order — the set that
/// remains after each removal — is itself feasible.
pub fn feasible_chain(
    weights: &[Q],
    requests: &BTreeMap<usize, Q>,
    resource: &Q,
) -> Result<Vec<usize>, MaxminError> {
    if !is_feasible(weights, requests, resource)? {
        return Err(MaxminError::InfeasibleRequests);
    }
    let mut left = requests.clone();
    let mut order = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let k = *left
            .iter()
            .max_by(|(ja, xa), (jb, xb)| {
                (*xa * &weights[**jb])
                    .cmp(&(*xb * &weights[**ja]))
                    .then(jb.cmp(ja)) // prefer the smaller id on ties
            })
            .map(|(j, _)| j)
            .expect("nonempty");
        left.remove(&k);
        order.push(k);
        debug_assert!(is_feasible(weights, &left, resource).unwrap());
    }
    Ok(order)
}

/// Feasible-ordering test: strict inequality
/// `x_k/phi_k < (X - sum_{j before k} x_j) / sum_{j from k on} phi_j`
/// at every position `k` of the order.
pub fn is_feasible_ordering(
    weights: &[Q],
    requests: &[Q],
    resource: &Q,
    order: &[usize],
) -> Result<bool, MaxminError> {
    assert_eq!(weights.len(), requests.len());
    if !resource.is_positive() {
        return Err(MaxminError::NonpositiveResource(resource.clone()));
    }
    let n = weights.len();
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n || seen[j] {
            return Err(MaxminError::NotAPermutation);
        }
        seen[j] = true;
    }
    if order.len() != n {
        return Err(MaxminError::NotAPermutation);
    }
    let mut consumed = Q::zero();
    let mut tail_weight: Q = weights.iter().sum();
    for &k in order {
        let slack = resource - &consumed;
        if &requests[k] * &tail_weight >= &slack * &weights[k] {
            return Ok(false);
        }
        consumed += &requests[k];
        tail_weight -= &weights[k];
    }
    Ok(true)
}
