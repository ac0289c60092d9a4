use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use jcoupling::geometry::{
    generate_diamond_cluster, nv_center_cluster, parse_xyz, write_xyz, BondClass, ClassTolerances, Cluster,
    CrystalAxis, LatticeSpec,
};
use jcoupling::orca::{parse_producer_output, read_canonical, write_canonical, CouplingDocument};
use jcoupling::report::{
    bar_data, bars_to_csv, rows_to_csv, rows_to_json, table1_report, vacancy_proximity_report, PairFilter, Quantity,
};
use jcoupling::spin::{orientation_sweep, spectrum, sweep_to_csv, Orientation, SpinSystem};
use jcoupling::tensor::Vec3;

use crate::args::{
    GeometryOptions, InputFormat, LatticeArgs, OrientArg, PairsArgs, ParseArgs, QuantityArg, ReportArgs, ReportStyle,
    SpectrumArgs,
};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes `contents` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses `x,y,z`.
pub fn parse_triple(text: &str, what: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("{what} must be three comma-separated numbers, got `{text}`");
    }
    let mut out = [0.0f64; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| anyhow!("{what}: `{p}` is not a number"))?;
        if !slot.is_finite() {
            bail!("{what}: `{p}` is not finite");
        }
    }
    Ok(out)
}

fn parse_direction(text: &str, what: &str) -> Result<Vec3> {
    let v = match text {
        "x" | "X" => Vec3::x(),
        "y" | "Y" => Vec3::y(),
        "z" | "Z" => Vec3::z(),
        _ => Vec3::from(parse_triple(text, what)?),
    };
    let n = v.norm();
    if n == 0.0 {
        bail!("{what} must not be the zero vector");
    }
    Ok(v / n)
}

/// Parses `axis:steps`.
pub fn parse_sweep(text: &str) -> Result<(Vec3, usize)> {
    let (axis, steps) = text
        .rsplit_once(':')
        .ok_or_else(|| anyhow!("--sweep expects axis:steps, got `{text}`"))?;
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| anyhow!("--sweep: `{steps}` is not a step count"))?;
    if steps == 0 {
        bail!("--sweep needs at least one step");
    }
    Ok((parse_direction(axis.trim(), "--sweep axis")?, steps))
}

fn tolerances(opts: &GeometryOptions) -> Result<ClassTolerances> {
    for (v, name) in [(opts.parallel_tol, "--parallel-tol"), (opts.tetra_tol, "--tetra-tol")] {
        if !(v >= 0.0 && v.is_finite()) {
            bail!("{name} must be a non-negative number of degrees");
        }
    }
    Ok(ClassTolerances {
        parallel_deg: opts.parallel_tol,
        tetrahedral_deg: opts.tetra_tol,
    })
}

fn prepare_cluster(cluster: Cluster, opts: &GeometryOptions) -> Result<Cluster> {
    if !(opts.max_bond > 0.0 && opts.max_bond.is_finite()) {
        bail!("--max-bond must be positive");
    }
    let axis = parse_direction(&opts.axis, "--axis")?;
    Ok(cluster.with_axis(axis)?.build_bond_graph(opts.max_bond)?)
}

fn load_document(path: &Path, format: Option<InputFormat>) -> Result<CouplingDocument> {
    let text = read(path)?;
    let format = format.unwrap_or(if text.trim_start().starts_with('{') {
        InputFormat::Canonical
    } else {
        InputFormat::Producer
    });
    match format {
        InputFormat::Canonical => read_canonical(&text).with_context(|| format!("in {}", path.display())),
        InputFormat::Producer => {
            let (doc, report) = parse_producer_output(&text).with_context(|| format!("in {}", path.display()))?;
            for w in &report.warnings {
                eprintln!("warning: {}:{}: {}", path.display(), w.line, w.message);
            }
            eprintln!(
                "{}: {} pair(s), {} total(s) recomputed, {} atom indices",
                path.display(),
                report.pairs_found,
                report.totals_recomputed,
                report.index_origin
            );
            Ok(doc)
        }
    }
}

pub fn parse(args: &ParseArgs) -> Result<()> {
    let doc = load_document(&args.input, args.format)?;
    write_atomic(&args.output, &write_canonical(&doc))
}

fn order_str(n: Option<u32>) -> String {
    n.map_or_else(|| "inf".to_owned(), |n| n.to_string())
}

pub fn pairs(args: &PairsArgs) -> Result<()> {
    let cluster = parse_xyz(&read(&args.geometry)?).with_context(|| format!("in {}", args.geometry.display()))?;
    let opts = &args.geometry_options;
    let tol = tolerances(opts)?;
    let cluster = prepare_cluster(cluster, opts)?;
    let pairs = cluster.enumerate_pairs(&args.element, &tol)?;
    let mut out = String::from("a,b,n,distance_angstrom,angle_to_axis_deg,class\n");
    let mut kept = 0;
    for p in pairs.iter().filter(|p| opts.order.is_none_or(|n| p.n == Some(n))) {
        kept += 1;
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.2},{}",
            p.a,
            p.b,
            order_str(p.n),
            p.distance,
            p.angle_to_axis,
            p.class
        );
    }
    write_atomic(&args.output, &out)?;
    eprintln!("{} of {} pair(s) written", kept, pairs.len());
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let doc = load_document(&args.tensors, None)?;
    let cluster = match &args.geometry {
        Some(path) => parse_xyz(&read(path)?).with_context(|| format!("in {}", path.display()))?,
        None => doc
            .cluster()
            .ok_or_else(|| anyhow!("--geometry is required when the tensor document has no atom list"))??,
    };
    let opts = &args.geometry_options;
    let tol = tolerances(opts)?;
    let cluster = prepare_cluster(cluster, opts)?;
    let classes = args
        .class
        .iter()
        .map(|c| BondClass::parse(c.trim()).ok_or_else(|| anyhow!("unknown bond class `{c}`")))
        .collect::<Result<Vec<_>>>()?;
    let filter = PairFilter {
        order: opts.order,
        classes: (!classes.is_empty()).then_some(classes),
    };

    let contents = match args.style {
        ReportStyle::Bars => {
            let quantity = match args.quantity {
                QuantityArg::Iso => Quantity::JIso,
                QuantityArg::Xx => Quantity::JXx,
                QuantityArg::Yy => Quantity::JYy,
                QuantityArg::Zz => Quantity::JZz,
            };
            let mut bars = bar_data(&doc, &cluster, quantity, &tol)?;
            if filter != PairFilter::default() {
                let rows = table1_report(&doc, &cluster, &filter, &tol)?;
                bars.retain(|b| rows.iter().any(|r| r.label == b.label));
            }
            bars_to_csv(&bars)
        }
        ReportStyle::Table1 => {
            let rows = match &args.vacancy {
                Some(v) => {
                    let vacancy = Vec3::from(parse_triple(v, "--vacancy")?);
                    vacancy_proximity_report(&doc, &cluster, &filter, &tol, &vacancy)?
                }
                None => table1_report(&doc, &cluster, &filter, &tol)?,
            };
            eprintln!("{} row(s)", rows.len());
            if args.output.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                rows_to_json(&rows)
            } else {
                rows_to_csv(&rows)
            }
        }
    };
    write_atomic(&args.output, &contents)
}

pub fn spectrum_cmd(args: &SpectrumArgs) -> Result<()> {
    let sys = SpinSystem::from_json(&read(&args.system)?).with_context(|| format!("in {}", args.system.display()))?;
    if !args.field_mt.is_finite() {
        bail!("--field-mT must be finite");
    }
    let field_t = args.field_mt * 1e-3;
    let [a, b, c] = parse_triple(&args.euler, "--euler")?;
    let orient = Orientation::from_euler_deg(a, b, c);
    let contents = match &args.sweep {
        None => {
            let spec = spectrum(&sys, field_t, &orient);
            eprintln!("{} line(s)", spec.lines.len());
            spec.to_csv()
        }
        Some(s) => {
            let (axis, steps) = parse_sweep(s)?;
            let sweep = orientation_sweep(&sys, field_t, &orient, &axis, steps)?;
            eprintln!("{} orientation(s)", sweep.len());
            sweep_to_csv(&sweep)
        }
    };
    write_atomic(&args.output, &contents)
}

pub fn lattice(args: &LatticeArgs) -> Result<()> {
    if !(args.radius > 0.0 && args.radius.is_finite()) {
        bail!("--radius must be positive, got {}", args.radius);
    }
    let orientation = match args.orient {
        OrientArg::Cubic001 => CrystalAxis::Cubic001,
        OrientArg::Bond111 => CrystalAxis::Bond111,
    };
    let orient_label = match args.orient {
        OrientArg::Cubic001 => "001",
        OrientArg::Bond111 => "111",
    };
    let (cluster, comment) = if args.nv {
        if orientation != CrystalAxis::Bond111 {
            bail!("--nv needs --orient 111");
        }
        let (cluster, vacancy) = nv_center_cluster(args.radius)?;
        let comment = format!(
            "diamond NV cluster radius={} orient=111 vacancy={},{},{}",
            args.radius, vacancy.x, vacancy.y, vacancy.z
        );
        (cluster, comment)
    } else {
        let cluster = generate_diamond_cluster(&LatticeSpec::new(args.radius, orientation))?;
        (
            cluster,
            format!("diamond cluster radius={} orient={orient_label}", args.radius),
        )
    };
    write_atomic(&args.output, &write_xyz(&cluster, &comment))?;
    eprintln!("{} atom(s)", cluster.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_and_directions() {
        assert_eq!(parse_triple("1, -2,3.5", "v").unwrap(), [1.0, -2.0, 3.5]);
        assert!(parse_triple("1,2", "v").is_err());
        assert!(parse_triple("1,2,nan", "v").is_err());
        assert_eq!(parse_direction("y", "axis").unwrap(), Vec3::y());
        assert_eq!(parse_direction("0,0,2", "axis").unwrap(), Vec3::z());
        assert!(parse_direction("0,0,0", "axis").is_err());
    }

    #[test]
    fn sweep_spec() {
        let (axis, steps) = parse_sweep("x:8").unwrap();
        assert_eq!((axis, steps), (Vec3::x(), 8));
        let (axis, _) = parse_sweep("1,1,0:4").unwrap();
        assert!((axis - Vec3::new(1.0, 1.0, 0.0).normalize()).norm() < 1e-15);
        assert!(parse_sweep("x:0").is_err());
        assert!(parse_sweep("x").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
