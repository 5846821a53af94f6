//! Certificate tightening: last-use fill-in and removal of derivations that
//! do not contribute to the goal.

use thiserror::Error;

use crate::checker::{verify, CheckOptions, Failure};
use crate::model::Certificate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TightenError {
    #[error("derivation {index} references constraint {reference}, which is not earlier")]
    ForwardReference { index: usize, reference: usize },
    #[error("cannot prune a certificate that does not verify: {0}")]
    NotVerified(Failure),
}

/// Sets every derivation's last-use index to the largest index referencing it (`None` if unreferenced).
///
/// Original constraints carry no last-use slot in the file format and are kept for the whole run.
pub fn compute_last_use(cert: &Certificate) -> Result<Certificate, TightenError> {
    let m = cert.problem.num_constraints();
    let mut last: Vec<Option<usize>> = vec![None; cert.derivations.len()];
    for (k, d) in cert.derivations.iter().enumerate() {
        let index = m + k;
        for r in d.reason.references() {
            if r >= index {
                return Err(TightenError::ForwardReference { index, reference: r });
            }
            if r >= m {
                last[r - m] = Some(index);
            }
        }
    }
    let mut out = cert.clone();
    for (d, l) in out.derivations.iter_mut().zip(last) {
        d.last_use = l;
    }
    Ok(out)
}

/// Keeps only derivations backward-reachable from goal-proving ones, renumbers
/// the index space and recomputes last-use indices.
pub fn prune_unused(cert: &Certificate) -> Result<Certificate, TightenError> {
    let options = CheckOptions {
        trace: true,
        evict: false,
        ..CheckOptions::default()
    };
    let report = verify(cert, options);
    if let Some(f) = report.failure {
        return Err(TightenError::NotVerified(f));
    }
    let m = cert.problem.num_constraints();
    let mut keep = vec![false; cert.derivations.len()];
    let mut stack: Vec<usize> = report.trace.iter().filter(|t| t.proves_goal).map(|t| t.index).collect();
    while let Some(index) = stack.pop() {
        let k = index - m;
        if keep[k] {
            continue;
        }
        keep[k] = true;
        stack.extend(cert.derivations[k].reason.references().into_iter().filter(|&r| r >= m));
    }
    let mut remap = vec![usize::MAX; cert.derivations.len()];
    let mut next = m;
    for (k, kept) in keep.iter().enumerate() {
        if *kept {
            remap[k] = next;
            next += 1;
        }
    }
    let translate = |r: usize| if r < m { r } else { remap[r - m] };
    let derivations = cert
        .derivations
        .iter()
        .zip(&keep)
        .filter(|(_, kept)| **kept)
        .map(|(d, _)| {
            let mut d = d.clone();
            d.reason = d.reason.map_references(translate);
            d.last_use = None;
            d
        })
        .collect();
    let pruned = Certificate {
        derivations,
        ..cert.clone()
    };
    compute_last_use(&pruned)
}

/// Last-use fill-in, preceded by pruning when `prune` is set.
pub fn tighten(cert: &Certificate, prune: bool) -> Result<Certificate, TightenError> {
    if prune {
        prune_unused(cert)
    } else {
        compute_last_use(cert)
    }
}
