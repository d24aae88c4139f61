//! Multi-disk string configurations and strand-following resolution.
//!
//! A [`GluingConfig`] places a number of disks (each with `2k_i` marked points
//! in clockwise order from the first point) and an optional output boundary,
//! and joins every marked point to exactly one other by a string. Filling each
//! disk with a Temperley-Lieb diagram and following strands through both
//! matchings yields an output matching plus a number of closed loops.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::tl::TLDiagram;

pub type DiskId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Disk { disk: DiskId, point: usize },
    Open(usize),
}

impl Endpoint {
    pub fn disk(disk: DiskId, point: usize) -> Self {
        Endpoint::Disk { disk, point }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiskSpec {
    pub id: DiskId,
    /// Number of marked points, always even.
    pub n_points: usize,
}

#[derive(Clone, Debug)]
pub struct GluingConfig {
    disks: Vec<DiskSpec>,
    open_points: usize,
    free_loops: usize,
    // flattened node indexing: disk points first (in disk order), then open points
    offsets: Vec<usize>,
    string_partner: Vec<u32>,
}

/// Outcome of filling every disk and following the strands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    /// Partner array on the output points.
    pub open_partner: Vec<usize>,
    pub loops: usize,
}

impl Resolved {
    /// The output matching as a diagram; fails when it crosses.
    pub fn diagram(&self) -> Result<TLDiagram> {
        TLDiagram::from_partner(self.open_partner.clone())
    }
}

impl GluingConfig {
    pub fn new(
        disks: Vec<DiskSpec>,
        open_points: usize,
        strings: &[(Endpoint, Endpoint)],
        free_loops: usize,
    ) -> Result<Self> {
        let mut seen_ids = HashSet::new();
        let mut offsets = Vec::with_capacity(disks.len());
        let mut total = 0usize;
        for d in &disks {
            if !seen_ids.insert(d.id) {
                return Err(Error::validation(format!("duplicate disk id {}", d.id)));
            }
            if d.n_points % 2 != 0 {
                return Err(Error::validation(format!(
                    "disk {} has an odd number of points ({})",
                    d.id, d.n_points
                )));
            }
            offsets.push(total);
            total += d.n_points;
        }
        if open_points % 2 != 0 {
            return Err(Error::validation("odd number of output points"));
        }
        let n_nodes = total + open_points;
        let index: BTreeMap<DiskId, usize> =
            disks.iter().enumerate().map(|(i, d)| (d.id, i)).collect();
        let node = |e: Endpoint| -> Result<usize> {
            match e {
                Endpoint::Disk { disk, point } => {
                    let &i = index
                        .get(&disk)
                        .ok_or_else(|| Error::validation(format!("string ends on unknown disk {disk}")))?;
                    if point >= disks[i].n_points {
                        return Err(Error::validation(format!(
                            "point {point} out of range on disk {disk}"
                        )));
                    }
                    Ok(offsets[i] + point)
                }
                Endpoint::Open(p) => {
                    if p >= open_points {
                        return Err(Error::validation(format!("output point {p} out of range")));
                    }
                    Ok(total + p)
                }
            }
        };
        let mut string_partner = vec![u32::MAX; n_nodes];
        for &(a, b) in strings {
            let (na, nb) = (node(a)?, node(b)?);
            if na == nb {
                return Err(Error::validation(format!("string from {a:?} to itself")));
            }
            for (n, e) in [(na, a), (nb, b)] {
                if string_partner[n] != u32::MAX {
                    return Err(Error::validation(format!("endpoint {e:?} used by two strings")));
                }
            }
            string_partner[na] = nb as u32;
            string_partner[nb] = na as u32;
        }
        if let Some(n) = string_partner.iter().position(|&p| p == u32::MAX) {
            let what = if n < total {
                let i = offsets.partition_point(|&o| o <= n) - 1;
                format!("disk {} point {}", disks[i].id, n - offsets[i])
            } else {
                format!("output point {}", n - total)
            };
            return Err(Error::validation(format!("dangling endpoint: {what}")));
        }
        Ok(Self {
            disks,
            open_points,
            free_loops,
            offsets,
            string_partner,
        })
    }

    pub fn disks(&self) -> &[DiskSpec] {
        &self.disks
    }

    pub fn open_points(&self) -> usize {
        self.open_points
    }

    pub fn free_loops(&self) -> usize {
        self.free_loops
    }

    /// The strings as endpoint pairs, each listed once.
    pub fn strings(&self) -> Vec<(Endpoint, Endpoint)> {
        let endpoint = |n: usize| -> Endpoint {
            let total = self.disk_point_count();
            if n >= total {
                return Endpoint::Open(n - total);
            }
            let i = self.offsets.partition_point(|&o| o <= n) - 1;
            Endpoint::disk(self.disks[i].id, n - self.offsets[i])
        };
        self.string_partner
            .iter()
            .enumerate()
            .filter(|(i, &j)| *i < j as usize)
            .map(|(i, &j)| (endpoint(i), endpoint(j as usize)))
            .collect()
    }

    fn disk_point_count(&self) -> usize {
        self.disks.iter().map(|d| d.n_points).sum()
    }

    /// Resolves with contents keyed by disk id.
    pub fn resolve(&self, contents: &BTreeMap<DiskId, TLDiagram>) -> Result<Resolved> {
        let ordered = self
            .disks
            .iter()
            .map(|d| {
                contents
                    .get(&d.id)
                    .ok_or_else(|| Error::validation(format!("no content for disk {}", d.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.resolve_ordered(&ordered)
    }

    /// Resolves with contents given in disk order.
    pub fn resolve_ordered(&self, contents: &[&TLDiagram]) -> Result<Resolved> {
        if contents.len() != self.disks.len() {
            return Err(Error::validation(format!(
                "{} contents for {} disks",
                contents.len(),
                self.disks.len()
            )));
        }
        let total = self.disk_point_count();
        let mut inner = vec![0u32; total];
        for ((spec, &off), diagram) in self.disks.iter().zip(&self.offsets).zip(contents) {
            if diagram.n_points() != spec.n_points {
                return Err(Error::validation(format!(
                    "disk {} has {} points but its content has {}",
                    spec.id,
                    spec.n_points,
                    diagram.n_points()
                )));
            }
            for (p, &q) in diagram.partners().iter().enumerate() {
                inner[off + p] = (off + q) as u32;
            }
        }
        Ok(follow_strands(&self.string_partner, &inner, total, self.open_points, self.free_loops))
    }
}

/// Follows strands through the string matching and the disk-internal matching.
/// Nodes `0..n_disk` have both; nodes `n_disk..` are output points with only a string.
pub(crate) fn follow_strands(
    string_partner: &[u32],
    inner: &[u32],
    n_disk: usize,
    n_open: usize,
    free_loops: usize,
) -> Resolved {
    let mut visited = vec![false; n_disk];
    let mut open_partner = vec![usize::MAX; n_open];
    for start in 0..n_open {
        if open_partner[start] != usize::MAX {
            continue;
        }
        let mut cur = string_partner[n_disk + start] as usize;
        while cur < n_disk {
            visited[cur] = true;
            let across = inner[cur] as usize;
            visited[across] = true;
            cur = string_partner[across] as usize;
        }
        let end = cur - n_disk;
        open_partner[start] = end;
        open_partner[end] = start;
    }
    let mut loops = free_loops;
    for start in 0..n_disk {
        if visited[start] {
            continue;
        }
        loops += 1;
        let mut cur = start;
        loop {
            visited[cur] = true;
            let across = inner[cur] as usize;
            visited[across] = true;
            cur = string_partner[across] as usize;
            if cur == start {
                break;
            }
        }
    }
    Resolved { open_partner, loops }
}

/// Free-function form of [`GluingConfig::resolve`].
pub fn resolve_gluing(config: &GluingConfig, contents: &BTreeMap<DiskId, TLDiagram>) -> Result<Resolved> {
    config.resolve(contents)
}
