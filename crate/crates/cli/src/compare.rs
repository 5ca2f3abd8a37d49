//! Lemma allocation against brute-force search over the noise power.

use std::io::Write;

use anyhow::bail;
use cogrelay_core::montecarlo::{exhaustive_power_search, SearchObjective, SearchResult};
use cogrelay_core::{full_allocation, total_outage, Error, PowerAllocation, ScenarioFile};

use crate::sweep::SweepVariable;
use crate::Range;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    /// Noise power range in dB.
    pub range: Range,
    pub resolution: usize,
    pub alpha_points: usize,
    pub objective: SearchObjective,
}

impl CompareSpec {
    pub fn new(range: Range) -> Self {
        CompareSpec { range, resolution: 400, alpha_points: 10_000, objective: SearchObjective::TotalOutage }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub n0_db: f64,
    pub g: f64,
    pub forbidden: bool,
    pub lemma: PowerAllocation,
    pub lemma_outage: f64,
    pub search: Option<SearchResult>,
}

impl CompareRow {
    /// Lemma `P_d` within one boundary-grid cell of the search optimum.
    pub fn p_d_matches(&self) -> bool {
        match &self.search {
            Some(s) => (self.lemma.p_d - s.p_d).abs() <= s.cell_p_d,
            None => self.forbidden,
        }
    }

    /// Every lemma ratio within one grid cell of the search optimum.
    pub fn alpha_matches(&self) -> bool {
        match &self.search {
            Some(s) => self.lemma.alpha.iter().zip(&s.alpha).all(|(a, b)| (a - b).abs() <= s.cell_alpha),
            None => self.forbidden,
        }
    }
}

pub fn pa_compare(file: &ScenarioFile, spec: &CompareSpec) -> anyhow::Result<Vec<CompareRow>> {
    if file.m == 0 {
        bail!("allocation comparison needs at least one relay");
    }
    spec.range
        .points()
        .into_iter()
        .map(|n0_db| {
            let cfg = SweepVariable::N0Db.apply(file, n0_db, file.m)?;
            let g = cogrelay_core::compute_g(&cfg)?;
            let lemma = full_allocation(&cfg)?;
            let lemma_outage = total_outage(&cfg, &lemma)?.p_total;
            let search = match exhaustive_power_search(&cfg, spec.resolution, spec.alpha_points, spec.objective) {
                Ok(s) => Some(s),
                Err(Error::SecondaryForbidden) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(CompareRow { n0_db, g, forbidden: lemma.forbidden, lemma, lemma_outage, search })
        })
        .collect()
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N0_dB",
        "g",
        "forbidden",
        "lemma_P_s",
        "lemma_P_d",
        "lemma_alpha",
        "lemma_outage",
        "search_P_s",
        "search_P_d",
        "search_alpha",
        "search_outage",
        "cell_P_d",
        "cell_alpha",
        "P_d_match",
        "alpha_match",
    ])?;
    for r in rows {
        let alpha = r.lemma.alpha.first().copied().unwrap_or(0.0);
        let (sp_s, sp_d, salpha, sout, cpd, ca) = match &r.search {
            Some(s) => (s.p_s, s.p_d, s.alpha[0], s.outage, s.cell_p_d, s.cell_alpha),
            None => (0.0, 0.0, 0.5, 1.0, 0.0, 0.0),
        };
        w.write_record([
            format!("{}", r.n0_db),
            format!("{}", r.g),
            r.forbidden.to_string(),
            format!("{}", r.lemma.p_s),
            format!("{}", r.lemma.p_d),
            format!("{alpha}"),
            format!("{}", r.lemma_outage),
            format!("{sp_s}"),
            format!("{sp_d}"),
            format!("{salpha}"),
            format!("{sout}"),
            format!("{cpd}"),
            format!("{ca}"),
            r.p_d_matches().to_string(),
            r.alpha_matches().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
