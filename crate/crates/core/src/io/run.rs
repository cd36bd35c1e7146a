//! The end-to-end pipeline: decorations, orbit, hull, quotient and cut
//! locus, with a certificate for every stage.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cutlocus::{
    cross_validate, cut_locus, dual_decomposition, enumerate_return_paths, CrossReport, CutLocus, CutLocusOptions,
    DualDecomposition,
};
use crate::doubling::{check_hull_symmetry, quotient_classify, symmetrize_decorations, MixedDecomposition};
use crate::ep_hull::{ep_decomposition, invariance_defects, Decomposition};
use crate::frames::Frames;
use crate::group::{orbit, validate_reflection, GroupSpec};
use crate::hull::HullOptions;
use crate::io::spec::{Algorithm, ManifoldSpec, RunOptions, SpecError};

/// Outcome of one check. `stage` names the pipeline step it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub stage: String,
    pub passed: bool,
    pub detail: String,
}

impl Certificate {
    fn new(stage: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Certificate { stage: stage.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub name: String,
    pub n: usize,
    /// Bounds and tolerances actually used; the length bound is the one the
    /// cut locus settled on.
    pub options: RunOptions,
    /// The group after decoration symmetrization.
    pub group: GroupSpec,
    pub ep: Option<Decomposition>,
    pub quotient: Option<MixedDecomposition>,
    pub cut_locus: Option<CutLocus>,
    pub dual: Option<DualDecomposition>,
    pub cross: Option<CrossReport>,
    pub certificates: Vec<Certificate>,
    pub timing: Duration,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        !self.certificates.is_empty() && self.certificates.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(|c| !c.passed)
    }
}

/// Runs the pipeline selected in `spec.options`. Only input errors are
/// returned as `Err`; a failing stage is recorded as a failed certificate
/// and ends the run.
pub fn run(spec: &ManifoldSpec) -> Result<RunReport, SpecError> {
    let start = Instant::now();
    let input = spec.group()?;
    let mut report = RunReport {
        name: spec.name.clone(),
        n: spec.dimension,
        options: spec.options.clone(),
        group: input.clone(),
        ep: None,
        quotient: None,
        cut_locus: None,
        dual: None,
        cross: None,
        certificates: Vec::new(),
        timing: Duration::ZERO,
    };
    pipeline(&mut report, input);
    report.timing = start.elapsed();
    Ok(report)
}

macro_rules! stage {
    ($report:expr, $name:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => {
                $report.certificates.push(Certificate::new($name, false, e.to_string()));
                return;
            }
        }
    };
}

fn pipeline(r: &mut RunReport, input: GroupSpec) {
    let o = r.options.clone();
    let hull = HullOptions { merge: o.tol, exact: o.exact, ..HullOptions::default() };

    for (i, tau) in input.reflections.iter().enumerate() {
        let cert = stage!(r, format!("reflection[{i}]"), validate_reflection(tau, &input, o.reflection_word_bound));
        let missing = cert.conjugates.iter().filter(|c| c.is_none()).count();
        r.certificates.push(Certificate::new(
            format!("reflection[{i}]"),
            cert.certified,
            format!("{missing} conjugates not found up to word length {}", o.reflection_word_bound),
        ));
    }
    let g = if input.reflections.is_empty() {
        input
    } else {
        stage!(r, "decorations", symmetrize_decorations(&input, o.margin, o.word_bound, o.height_bound))
    };
    r.group = g.clone();

    let (frames, ep) = if o.algorithm == Algorithm::Cutlocus {
        let orb = orbit(&g, o.word_bound, o.height_bound);
        (stage!(r, "frames", Frames::new(&g, &orb)), None)
    } else {
        let ep = stage!(r, "ep", ep_decomposition(&g, o.word_bound, o.height_bound, hull));
        let cert = &ep.certificate;
        r.certificates.push(Certificate::new(
            "ep-stability",
            cert.stable,
            format!("{} faces certified, {} mismatches against the larger rerun", cert.faces.len(), cert.mismatches),
        ));
        let letters = g.letter_matrices();
        let defects = invariance_defects(cert, &letters);
        r.certificates.push(Certificate::new("ep-invariance", defects == 0, format!("{defects} unmatched face images")));
        for (i, tau) in g.reflections.iter().enumerate() {
            let s = check_hull_symmetry(&cert.faces, &cert.orbit.points, tau, cert.cut_height);
            r.certificates.push(Certificate::new(
                format!("hull-symmetry[{i}]"),
                s.symmetric(),
                format!("{} faces checked, {} unmatched", s.checked, s.unmatched.len()),
            ));
        }
        (ep.frames, Some(ep.decomposition))
    };
    r.ep = ep;

    if o.algorithm != Algorithm::Ep {
        let copts = CutLocusOptions { word_bound: o.word_bound, height_bound: o.height_bound, length_bound: o.length_bound };
        let cl = stage!(r, "cut-locus", cut_locus(&g, &frames, copts));
        r.options.length_bound = cl.options.length_bound;
        let bigger = CutLocusOptions { word_bound: cl.options.word_bound + 1, height_bound: 2.0 * cl.options.height_bound, ..cl.options };
        let again = stage!(r, "path-stability", enumerate_return_paths(&g, &frames, &bigger));
        let same = again.len() == cl.paths.len()
            && again.iter().zip(&cl.paths).all(|(a, b)| a.key == b.key && (a.length - b.length).abs() <= 1e-9);
        r.certificates.push(Certificate::new(
            "path-stability",
            same,
            format!("{} return paths, {} in the larger rerun", cl.paths.len(), again.len()),
        ));
        let dual = stage!(r, "dual", dual_decomposition(&cl.complex, &g, &frames, hull));
        r.certificates.push(Certificate::new(
            "dual",
            true,
            format!("{} edges, {} faces, {} regions", dual.edges, dual.faces, dual.regions),
        ));
        if let Some(ep) = &r.ep {
            let cross = cross_validate(ep, &dual.decomposition);
            let detail = cross.first_mismatch.clone().unwrap_or_else(|| format!("{} cells match", cross.cells));
            r.certificates.push(Certificate::new("cross-validation", cross.matched, detail));
            r.cross = Some(cross);
        }
        r.cut_locus = Some(cl);
        r.dual = Some(dual);
    }

    if !g.reflections.is_empty() {
        let source = r.ep.as_ref().or(r.dual.as_ref().map(|d| &d.decomposition)).cloned();
        if let Some(d) = source {
            let q = stage!(r, "quotient", quotient_classify(&d, &g, &frames, o.word_bound));
            let truncated = q.cells.iter().filter(|c| c.external_face.is_some()).count();
            r.certificates.push(Certificate::new(
                "quotient",
                true,
                format!("{} cells, {truncated} truncated, {} pairings", q.cells.len(), q.pairings.len()),
            ));
            r.quotient = Some(q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_word_bound_fails_stability() {
        let mut spec = fixtures::thrice_punctured_sphere();
        spec.options.word_bound = 0;
        spec.options.algorithm = Algorithm::Ep;
        let r = run(&spec).unwrap();
        assert!(!r.passed());
        assert!(r.failures().any(|c| c.stage.starts_with("ep")));
    }

    #[test]
    fn figure_eight_both_pipelines_agree() {
        let r = run(&fixtures::figure_eight()).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.cross.as_ref().unwrap().matched);
        assert_eq!(r.ep.as_ref().unwrap().cells.len(), 2);
    }

    #[test]
    fn figure_three_gives_truncated_triangles() {
        let r = run(&fixtures::figure_three_double()).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let q = r.quotient.unwrap();
        assert!(!q.cells.is_empty() && q.cells.len() <= 2);
        for c in &q.cells {
            assert!(c.external_face.is_some());
            assert_eq!(c.ideal_vertices.len(), 2);
        }
    }

    #[test]
    fn cutlocus_only_run() {
        let mut spec = fixtures::once_punctured_torus();
        spec.options.algorithm = Algorithm::Cutlocus;
        let r = run(&spec).unwrap();
        assert!(r.passed());
        assert!(r.ep.is_none() && r.cross.is_none());
        assert_eq!(r.dual.unwrap().decomposition.cells.len(), 2);
    }
}
