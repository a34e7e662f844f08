use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssociationMode {
    CellFree,
    /// Each AP serves the given number of MSs with the strongest channels.
    UserCentric(usize),
}

/// Which APs serve which MSs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub mode: AssociationMode,
    /// `K(m)`: MSs served by AP `m`, ascending.
    pub served_by_ap: Vec<Vec<usize>>,
    /// `M(k)`: APs serving MS `k`, ascending.
    pub serving_aps: Vec<Vec<usize>>,
}

impl Association {
    pub fn num_aps(&self) -> usize {
        self.served_by_ap.len()
    }

    pub fn num_ms(&self) -> usize {
        self.serving_aps.len()
    }

    pub fn serves(&self, m: usize, k: usize) -> bool {
        self.served_by_ap[m].binary_search(&k).is_ok()
    }

    pub fn cell_free(m: usize, k: usize) -> Self {
        Self::from_served(AssociationMode::CellFree, vec![(0..k).collect(); m], k)
    }

    fn from_served(mode: AssociationMode, served_by_ap: Vec<Vec<usize>>, k: usize) -> Self {
        let mut serving_aps = vec![Vec::new(); k];
        for (m, served) in served_by_ap.iter().enumerate() {
            for &kk in served {
                serving_aps[kk].push(m);
            }
        }
        Association {
            mode,
            served_by_ap,
            serving_aps,
        }
    }
}

/// Builds the association from channel Frobenius norms, `norms[m * K + k]`.
/// In user-centric mode ties are broken toward the lower MS index.
pub fn associate(norms: &[f64], m: usize, k: usize, mode: AssociationMode) -> Result<Association> {
    if norms.len() != m * k {
        return Err(Error::Dimension(format!(
            "{} norms for {m} APs x {k} MSs",
            norms.len()
        )));
    }
    match mode {
        AssociationMode::CellFree => Ok(Association::cell_free(m, k)),
        AssociationMode::UserCentric(n) => {
            if n == 0 || n > k {
                return Err(Error::InvalidArgument(format!(
                    "user-centric N = {n} outside 1..={k}"
                )));
            }
            let served = (0..m)
                .map(|ap| {
                    let row = &norms[ap * k..(ap + 1) * k];
                    let mut idx: Vec<usize> = (0..k).collect();
                    // Stable sort keeps ascending index order among equal norms.
                    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
                    let mut top = idx[..n].to_vec();
                    top.sort_unstable();
                    top
                })
                .collect();
            Ok(Association::from_served(mode, served, k))
        }
    }
}
