//! One function per subcommand, each returning an exit status and the
//! report to write.

use std::fmt::Write as _;
use std::sync::Arc;

use fraisse::amalgamation::{
    dist_n, extend_one_point, free_amalgam, jep, jep_with_separation, AmalgamError, AmalgamResult, ExtensionRequest,
};
use fraisse::concentration::{
    concentration_csv, concentration_n, eppa_search, find_witness, group_closure, l1_power_capped, levy_chain,
    weak_extension_witness, ConcentrationError, EppaCaps, EppaOutcome, PowerSpace, SubsetColoring, DEFAULT_POWER_CAP,
    EXHAUSTIVE_LIMIT,
};
use fraisse::embeddings::{enumerate_embeddings, rho, EmbeddingError};
use fraisse::format::serialize;
use fraisse::ramsey::{
    best_beta, coloring_domain, random_coloring, worst_coloring_with, Coloring, RamseyError, RamseyInstance,
    SearchConfig, WorstValue,
};
use fraisse::rational::{fmt_rational, Rational};
use fraisse::report::{verifier_csv, verifier_text, witness_csv, witness_digest, witness_text};
use fraisse::structures::{generated_substructure, validate, MetricStructure, StructureError};

use crate::args::{self, show_map};
use crate::{CapArgs, Cli, Command, Failure, Format, RamseyArgs, Status};

type Outcome = Result<(Status, String), Failure>;

fn inconclusive(m: impl std::fmt::Display) -> Failure {
    Failure {
        status: Status::Inconclusive,
        message: m.to_string(),
    }
}

impl From<StructureError> for Failure {
    fn from(e: StructureError) -> Self {
        Failure::data(e)
    }
}

impl From<EmbeddingError> for Failure {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::ResourceCap { .. } => inconclusive(e),
            _ => Failure::data(e),
        }
    }
}

impl From<AmalgamError> for Failure {
    fn from(e: AmalgamError) -> Self {
        match e {
            AmalgamError::Embedding(e) => e.into(),
            _ => Failure::data(e),
        }
    }
}

impl From<RamseyError> for Failure {
    fn from(e: RamseyError) -> Self {
        match e {
            RamseyError::Embedding(e) => e.into(),
            RamseyError::Inconclusive { .. } => inconclusive(e),
            _ => Failure::data(e),
        }
    }
}

impl From<ConcentrationError> for Failure {
    fn from(e: ConcentrationError) -> Self {
        match e {
            ConcentrationError::Embedding(e) => e.into(),
            ConcentrationError::Ramsey(e) => e.into(),
            ConcentrationError::ResourceCap { .. } | ConcentrationError::NotFound(_) => inconclusive(e),
            _ => Failure::data(e),
        }
    }
}

fn one_value(format: Format, name: &str, value: &str) -> String {
    match format {
        Format::Text => format!("{value}\n"),
        Format::Csv => format!("{name}\n{value}\n"),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let f = cli.format;
    match &cli.command {
        Command::Validate { file } => validate_file(f, file),
        Command::Embs { a, b, gens } => {
            let a = args::pointed(args::load(a)?, gens.as_deref())?;
            let b = args::load(b)?;
            let set = enumerate_embeddings(&a, &b)?;
            let mut out = match f {
                Format::Text => format!("{} embeddings\n", set.len()),
                Format::Csv => "index,map\n".to_string(),
            };
            for (i, e) in set.members().iter().enumerate() {
                let m = show_map(e, a.structure(), &b);
                match f {
                    Format::Text => writeln!(out, "{m}"),
                    Format::Csv => writeln!(out, "{i},\"{m}\""),
                }
                .expect("string write");
            }
            Ok((Status::Success, out))
        }
        Command::Rho {
            a,
            b,
            gens,
            alpha,
            beta,
        } => {
            let a = args::pointed(args::load(a)?, gens.as_deref())?;
            let b = args::load(b)?;
            let al = args::map("alpha", alpha, a.structure(), &b, false)?;
            let be = args::map("beta", beta, a.structure(), &b, false)?;
            let r = rho(&a, &b, &al, &be)?;
            Ok((Status::Success, one_value(f, "rho", &fmt_rational(&r))))
        }
        Command::Amalgamate { a, b0, b1, phi0, phi1 } => {
            let a = args::pointed(args::load(a)?, None)?;
            let (b0, b1) = (args::load(b0)?, args::load(b1)?);
            let p0 = args::map("phi0", phi0, a.structure(), &b0, false)?;
            let p1 = args::map("phi1", phi1, a.structure(), &b1, false)?;
            let r = free_amalgam(&a, &b0, &b1, &p0, &p1)?;
            Ok((Status::Success, amalgam_text(&r, &b0, &b1)))
        }
        Command::Jep { b0, b1, separation } => {
            let (b0, b1) = (args::load(b0)?, args::load(b1)?);
            let r = match separation {
                Some(s) => jep_with_separation(&b0, &b1, &args::positive("separation", s)?)?,
                None => jep(&b0, &b1)?,
            };
            Ok((Status::Success, amalgam_text(&r, &b0, &b1)))
        }
        Command::Dist { x, y, gens_x, gens_y } => {
            let x = args::pointed(args::load(x)?, gens_x.as_deref())?;
            let y = args::pointed(args::load(y)?, gens_y.as_deref())?;
            let w = dist_n(&x, &y)?;
            Ok((Status::Success, one_value(f, "dist", &fmt_rational(&w.value))))
        }
        Command::Extend {
            base,
            label,
            dist,
            pred,
        } => extend(base, label, dist, pred.as_deref()),
        Command::Power { b, n } => {
            if *n == 0 {
                return Err(Failure::usage("--n must be positive"));
            }
            let p = l1_power_capped(&args::load(b)?, *n, DEFAULT_POWER_CAP)?;
            Ok((Status::Success, serialize(&p.structure)))
        }
        Command::RamseyCheck(r) => ramsey(f, r, false),
        Command::WorstColoring(r) => ramsey(f, r, true),
        Command::BestBeta {
            instance,
            coloring,
            seed,
        } => best(f, instance, coloring.as_deref(), *seed),
        Command::ConcN { diam, eps, k } => {
            let diam = args::rational("diam", diam)?;
            let eps = args::positive("eps", eps)?;
            if diam < Rational::from_integer(0.into()) {
                return Err(Failure::usage("--diam must be nonnegative"));
            }
            let n = concentration_n(&diam, &eps, *k)?;
            Ok((Status::Success, one_value(f, "n", &n.to_string())))
        }
        Command::LevySim {
            carrier,
            auts,
            ns,
            eps,
            samples,
            seed,
        } => {
            let carrier = args::load(carrier)?;
            let gens = args::maps("auts", auts, &carrier, &carrier, true)?;
            let ns = args::usizes("ns", ns)?;
            let eps = args::positive("eps", eps)?;
            let group = group_closure(&carrier, &gens)?;
            let reports = levy_chain(&group, &ns, *samples, &eps, *seed)?;
            let out = match f {
                Format::Csv => concentration_csv(&reports),
                Format::Text => {
                    let mut out = String::new();
                    for r in &reports {
                        writeln!(
                            out,
                            "n {} group_size {} epsilon {} samples {} empirical_mass {} bound {} seed {}",
                            r.n,
                            r.group_size,
                            fmt_rational(&r.epsilon),
                            r.samples,
                            r.empirical_mass,
                            r.bound,
                            r.seed
                        )
                        .expect("string write");
                    }
                    out
                }
            };
            Ok((Status::Success, out))
        }
        Command::Witness {
            carrier,
            point,
            auts,
            eps,
            budget,
            n,
            seed,
            coloring_seed,
        } => {
            let text = args::read(carrier)?;
            let carrier = args::load(carrier)?;
            let p = carrier
                .index_of(point)
                .ok_or_else(|| Failure::data(format!("--point: unknown point `{point}`")))?;
            let a = generated_substructure(&carrier, &[p])?;
            if a.structure().len() != 1 {
                return Err(Failure::data("the carrier has constants; a one-point A is required"));
            }
            let iota = fraisse::embeddings::Embedding::new(vec![p]);
            let gens = args::maps("auts", auts, &carrier, &carrier, true)?;
            let eps = args::positive("eps", eps)?;
            let group = group_closure(&carrier, &gens)?;
            let n = match n {
                Some(0) => return Err(Failure::usage("--n must be positive")),
                Some(n) => *n,
                None => {
                    let n = concentration_n(&group.diameter(), &eps, gens.len() as u64)?;
                    usize::try_from(n).map_err(|_| Failure::data("power too large"))?
                }
            };
            let space = PowerSpace::new(carrier.clone(), n)?;
            let gamma = SubsetColoring::new(&a, &space, coloring_seed.unwrap_or(*seed))?;
            match find_witness(&gamma, &a, &iota, &group, &space, &eps, *budget, *seed) {
                Ok(w) => {
                    let d = witness_digest(&text, &a, &gens, n, &eps, *seed);
                    let out = match f {
                        Format::Text => witness_text(&d, &eps, &w),
                        Format::Csv => witness_csv(&d, &eps, &w),
                    };
                    Ok((Status::Success, out))
                }
                Err(ConcentrationError::NoWitness { best, samples }) => {
                    let exhaustive = group.power_size(n) <= EXHAUSTIVE_LIMIT;
                    Err(Failure {
                        status: if exhaustive {
                            Status::Negative
                        } else {
                            Status::Inconclusive
                        },
                        message: format!(
                            "no witness after {samples} samples{}; best oscillation {}",
                            if exhaustive { " and exhaustive search" } else { "" },
                            fmt_rational(&best)
                        ),
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Eppa { a, caps } => {
            let a = args::load(a)?;
            match eppa_search(&a, &eppa_caps(caps))? {
                EppaOutcome::Found(w) => {
                    let mut out = format!(
                        "# found: {} points, {} partial isomorphisms extended, {} candidates tried\n",
                        w.b.len(),
                        w.extensions.len(),
                        w.stats.candidates
                    );
                    for (p, g) in &w.extensions {
                        let dom: Vec<String> = p
                            .domain
                            .iter()
                            .zip(&p.image)
                            .map(|(&x, &y)| format!("{}:{}", a.label(x), a.label(y)))
                            .collect();
                        writeln!(out, "# {{{}}} extends to {}", dom.join(","), show_map(g, &w.b, &w.b))
                            .expect("string write");
                    }
                    out.push_str(&serialize(&w.b));
                    Ok((Status::Success, out))
                }
                EppaOutcome::NotFound(stats) => Ok((Status::Inconclusive, format!("not found\n{stats}\n"))),
            }
        }
        Command::Wep {
            a,
            fragment,
            gens,
            alphas,
            eps,
            caps,
        } => {
            let a = args::pointed(args::load(a)?, gens.as_deref())?;
            let k = args::load(fragment)?;
            let alphas = args::maps("alphas", alphas, a.structure(), &k, false)?;
            let eps = args::positive("eps", eps)?;
            let w = weak_extension_witness(&a, &k, &alphas, &eps, &eppa_caps(caps))?;
            let mut out = format!("# {} points, group of order {}\n", w.bp.len(), w.group.order());
            for (i, g) in w.gs.iter().enumerate() {
                writeln!(out, "# g{} = {}", i + 1, show_map(g, &w.bp, &w.bp)).expect("string write");
            }
            out.push_str(&serialize(&w.bp));
            Ok((Status::Success, out))
        }
    }
}

fn eppa_caps(c: &CapArgs) -> EppaCaps {
    EppaCaps {
        max_extra: c.max_extra,
        max_denominator: c.max_denominator,
        max_candidates: c.max_candidates,
    }
}

fn validate_file(f: Format, file: &std::path::Path) -> Outcome {
    let s = args::load_unchecked(file)?;
    let diags = validate(&s);
    let mut out = match f {
        Format::Text if diags.is_empty() => "valid\n".to_string(),
        Format::Text => String::new(),
        Format::Csv => "diagnostic\n".to_string(),
    };
    for d in &diags {
        match f {
            Format::Text => writeln!(out, "{d}"),
            Format::Csv => writeln!(out, "\"{d}\""),
        }
        .expect("string write");
    }
    Ok((
        if diags.is_empty() {
            Status::Success
        } else {
            Status::Negative
        },
        out,
    ))
}

fn amalgam_text(r: &AmalgamResult, b0: &MetricStructure, b1: &MetricStructure) -> String {
    format!(
        "# left  {}\n# right {}\n{}",
        show_map(&r.left_arm, b0, &r.amalgam),
        show_map(&r.right_arm, b1, &r.amalgam),
        serialize(&r.amalgam)
    )
}

fn extend(base: &std::path::Path, label: &str, dist: &str, pred: Option<&str>) -> Outcome {
    let base = args::load(base)?;
    let mut distances: Vec<Option<Rational>> = vec![None; base.len()];
    for (k, v) in args::pairs("dist", dist)? {
        let i = base
            .index_of(k)
            .ok_or_else(|| Failure::data(format!("--dist: unknown point `{k}`")))?;
        distances[i] = Some(args::rational("dist", v)?);
    }
    let distances = distances
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| Failure::usage(format!("--dist: no distance to `{}`", base.label(i)))))
        .collect::<Result<Vec<_>, _>>()?;
    let sig = base.signature();
    let mut values: Vec<Option<Rational>> = vec![None; sig.predicates().len()];
    for (k, v) in args::pairs("pred", pred.unwrap_or(""))? {
        let i = sig
            .predicate_index(k)
            .ok_or_else(|| Failure::data(format!("--pred: unknown predicate `{k}`")))?;
        values[i] = Some(args::rational("pred", v)?);
    }
    let predicate_values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Failure::usage(format!("--pred: no value for `{}`", sig.predicates()[i].name))))
        .collect::<Result<Vec<_>, _>>()?;
    let s = extend_one_point(&ExtensionRequest {
        base: base.clone(),
        label: label.to_string(),
        distances,
        predicate_values,
    })?;
    Ok((Status::Success, serialize(&s)))
}

fn instance(r: &RamseyArgs) -> Result<RamseyInstance, Failure> {
    let a = args::pointed(args::load(&r.a)?, r.gens.as_deref())?;
    let b = args::load(&r.b)?;
    let c = args::load(&r.c)?;
    let family = args::maps("family", &r.family, a.structure(), &b, false)?;
    let eps = args::positive("eps", &r.eps)?;
    Ok(RamseyInstance::new(a, b, family, eps, c)?)
}

fn ramsey(f: Format, r: &RamseyArgs, value_first: bool) -> Outcome {
    let inst = instance(r)?;
    let report = match worst_coloring_with(&inst, &SearchConfig::from_env()) {
        Ok(report) => report,
        Err(RamseyError::Inconclusive { lower, upper, nodes }) => {
            let out = match f {
                Format::Text => format!(
                    "inconclusive\nlower {}\nupper {}\nnodes {nodes}\n",
                    fmt_rational(&lower),
                    fmt_rational(&upper)
                ),
                Format::Csv => format!(
                    "status,lower,upper,nodes\ninconclusive,{},{},{nodes}\n",
                    fmt_rational(&lower),
                    fmt_rational(&upper)
                ),
            };
            return Ok((Status::Inconclusive, out));
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = String::new();
    if value_first && f == Format::Text {
        writeln!(out, "{}", report.worst_value).expect("string write");
    }
    out.push_str(&match f {
        Format::Text => verifier_text(&inst, &report),
        Format::Csv => verifier_csv(&inst, &report),
    });
    Ok((
        if report.holds {
            Status::Success
        } else {
            Status::Negative
        },
        out,
    ))
}

fn best(f: Format, r: &RamseyArgs, coloring: Option<&str>, seed: Option<u64>) -> Outcome {
    let inst = instance(r)?;
    let domain = coloring_domain(&inst.a, &inst.c)?;
    let gamma = match (coloring, seed) {
        (Some(text), _) => {
            let values = text
                .split(',')
                .map(|v| args::rational("coloring", v))
                .collect::<Result<Vec<_>, _>>()?;
            Coloring::new(Arc::clone(&domain), values)?
        }
        (None, Some(s)) => random_coloring(Arc::clone(&domain), s)?,
        (None, None) => return Err(Failure::usage("best-beta needs --coloring or --seed")),
    };
    let (beta, osc) = match best_beta(&gamma, &inst) {
        Ok(x) => x,
        Err(RamseyError::NoEmbeddings) => {
            return Ok((
                Status::Negative,
                one_value(f, "oscillation", &WorstValue::Infinite.to_string()),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let m = show_map(&beta, &inst.b, &inst.c);
    let out = match f {
        Format::Text => format!("beta {m}\noscillation {}\n", fmt_rational(&osc)),
        Format::Csv => format!("beta,oscillation\n\"{m}\",{}\n", fmt_rational(&osc)),
    };
    Ok((Status::Success, out))
}
