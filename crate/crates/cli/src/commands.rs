use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use bwp_core::analysis::{
    calibrate_noise, cdf, label_rooms, layout_grid_eval, log_spaced, mean_metrics, room_grid_eval, room_means,
    sweep_dimensions, sweep_frequency, GridMap, GridOptions, SweepSpec,
};
use bwp_core::montecarlo::{mc_powers, McConfig};
use bwp_core::surrogate::{
    format_model, generate_dataset, parse_model, predict_all, train, MlpModel, TrainConfig, DEFAULT_LAYERS,
};
use bwp_core::{
    building_powers, make_office_layout, make_rect_room, parse_layout, parse_scenario, BuildingLayout, Bounds,
    GainModels, OfficeSpec, Point2D, PowerBreakdown, QuadratureConfig, RoomSpec, Scenario, TwoRayForm,
};

use crate::cli::*;
use crate::output::{num, write_csv, Manifest};
use crate::UsageError;

pub struct Ctx<'a> {
    pub out_dir: &'a Path,
    pub threads: usize,
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}

fn scenario(args: &ScenarioArgs, fallback_freq: Option<f64>) -> Result<Scenario> {
    let mut s = match &args.scenario {
        Some(path) => {
            parse_scenario(&read(path, "scenario")?).with_context(|| format!("in scenario {}", path.display()))?
        }
        None => {
            let Some(f) = args.freq_ghz.or(fallback_freq) else {
                return Err(UsageError("--freq-ghz or --scenario is required".into()).into());
            };
            Scenario::at_frequency(f)
        }
    };
    if let Some(f) = args.freq_ghz {
        s.frequency_ghz = f;
    }
    if let Some(v) = args.noise_dbw {
        s.noise_dbw = v;
    }
    if let Some(v) = args.r_max {
        s.r_max_m = v;
    }
    if let Some(v) = args.r_min {
        s.r_min_m = v;
    }
    if let Some(t) = args.two_ray {
        s.two_ray = match t {
            TwoRayArg::Asymptotic => TwoRayForm::Asymptotic,
            TwoRayArg::Coherent => TwoRayForm::Coherent,
        };
    }
    s.validate()?;
    Ok(s)
}

fn models(nlos: NlosArg) -> GainModels {
    match nlos {
        NlosArg::SingleSlope => GainModels::default(),
        NlosArg::Multiwall => GainModels::multi_wall(),
    }
}

fn grid_options(g: &GridArgs) -> GridOptions {
    GridOptions {
        resolution_m: g.resolution,
        quad: QuadratureConfig {
            angular: g.angular,
            ..QuadratureConfig::default()
        },
        models: models(g.nlos_model),
        wall_attenuation_db: g.wall_db,
    }
}

fn grid_manifest(m: &mut Manifest, g: &GridArgs) {
    m.set(
        "grid",
        json!({
            "resolution_m": g.resolution,
            "angular": g.angular,
            "radial_panels": QuadratureConfig::default().radial.panels,
            "radial_rel_tol": QuadratureConfig::default().radial.rel_tol,
            "nlos_model": format!("{:?}", g.nlos_model),
            "wall_db": g.wall_db,
        }),
    );
}

pub const GRID_HEADER: [&str; 12] = [
    "x", "y", "g_i", "g_p", "p_b", "i_b", "p_o", "i_o", "p_b_los", "p_b_nlos", "i_b_los", "i_b_nlos",
];

fn grid_rows(grid: &GridMap) -> Vec<Vec<String>> {
    grid.cells
        .iter()
        .map(|c| {
            let b = &c.breakdown;
            [c.ue.x, c.ue.y, c.g_i, c.g_p, b.p_b, b.i_b, b.p_o, b.i_o, b.p_b_los, b.p_b_nlos, b.i_b_los, b.i_b_nlos]
                .iter()
                .map(|v| num(*v))
                .collect()
        })
        .collect()
}

fn builtin(b: Builtin) -> Result<BuildingLayout> {
    match b {
        Builtin::Office => Ok(make_office_layout(&OfficeSpec::default())?),
    }
}

fn load_layout(path: &Path) -> Result<BuildingLayout> {
    parse_layout(&read(path, "layout")?).with_context(|| format!("in layout {}", path.display()))
}

pub fn eval_room(ctx: &Ctx, a: &EvalRoomArgs) -> Result<()> {
    let spec = RoomSpec::new(a.width, a.length)?;
    let s = scenario(&a.scenario, None)?;
    let grid = room_grid_eval(spec, &s, &grid_options(&a.grid))?;
    let mean = mean_metrics(&grid)?;

    let mut m = Manifest::new("eval-room");
    m.scenario(&s).layout(&make_rect_room(spec, a.grid.wall_db)?);
    grid_manifest(&mut m, &a.grid);
    m.output(&write_csv(ctx.out_dir, "grid.csv", &GRID_HEADER, &grid_rows(&grid))?);
    m.output(&write_csv(
        ctx.out_dir,
        "summary.csv",
        &["width", "length", "cells", "mean_g_i", "mean_g_p"],
        &[vec![
            num(spec.width()),
            num(spec.length()),
            grid.cells.len().to_string(),
            num(mean.g_i),
            num(mean.g_p),
        ]],
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    println!("cells={} mean_g_i={} mean_g_p={}", grid.cells.len(), mean.g_i, mean.g_p);
    Ok(())
}

pub fn eval_building(ctx: &Ctx, a: &EvalBuildingArgs) -> Result<()> {
    let layout = match (&a.source.layout, a.source.builtin) {
        (Some(path), _) => load_layout(path)?,
        (None, Some(b)) => builtin(b)?,
        (None, None) => unreachable!("clap requires one layout source"),
    };
    let s = scenario(&a.scenario, None)?;
    let grid = layout_grid_eval(&layout, &s, &grid_options(&a.grid))?;
    let mean = mean_metrics(&grid)?;
    let labels = label_rooms(&layout, &grid);
    let rooms = room_means(&grid, &labels)?;

    let mut m = Manifest::new("eval-building");
    m.scenario(&s).layout(&layout);
    grid_manifest(&mut m, &a.grid);
    m.output(&write_csv(ctx.out_dir, "grid.csv", &GRID_HEADER, &grid_rows(&grid))?);
    let room_rows: Vec<Vec<String>> = rooms
        .iter()
        .map(|r| {
            vec![
                r.label.to_string(),
                r.cells.to_string(),
                num(r.centroid.x),
                num(r.centroid.y),
                num(r.mean.g_i),
                num(r.mean.g_p),
            ]
        })
        .collect();
    m.output(&write_csv(
        ctx.out_dir,
        "rooms.csv",
        &["room", "cells", "centroid_x", "centroid_y", "mean_g_i", "mean_g_p"],
        &room_rows,
    )?);
    for (name, values) in [("g_i", grid.g_i()), ("g_p", grid.g_p())] {
        let rows: Vec<Vec<String>> = cdf(&values)?.iter().map(|(v, p)| vec![num(*v), num(*p)]).collect();
        m.output(&write_csv(ctx.out_dir, &format!("cdf_{name}.csv"), &[name, "probability"], &rows)?);
    }
    m.write(ctx.out_dir, ctx.threads)?;
    println!(
        "cells={} rooms={} mean_g_i={} mean_g_p={}",
        grid.cells.len(),
        rooms.len(),
        mean.g_i,
        mean.g_p
    );
    Ok(())
}

pub fn sweep_dims(ctx: &Ctx, a: &SweepDimensionsArgs) -> Result<()> {
    let s = scenario(&a.scenario, None)?;
    let spec = SweepSpec {
        areas_m2: a.areas.clone(),
        aspect_ratios: a.aspect_ratios.clone(),
        frequencies_ghz: vec![s.frequency_ghz],
    };
    let rows = sweep_dimensions(&spec, &s, &grid_options(&a.grid))?;
    let mut m = Manifest::new("sweep-dimensions");
    m.scenario(&s).set("areas_m2", json!(a.areas)).set("aspect_ratios", json!(a.aspect_ratios));
    grid_manifest(&mut m, &a.grid);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.frequency_ghz),
                num(r.area_m2),
                num(r.aspect_ratio),
                num(r.mean.g_i),
                num(r.mean.g_p),
            ]
        })
        .collect();
    m.output(&write_csv(
        ctx.out_dir,
        "sweep_dimensions.csv",
        &["frequency_ghz", "area_m2", "aspect_ratio", "mean_g_i", "mean_g_p"],
        &table,
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    println!("rows={}", rows.len());
    Ok(())
}

pub fn sweep_freq(ctx: &Ctx, a: &SweepFrequencyArgs) -> Result<()> {
    let freqs = log_spaced(a.from, a.to, a.points)?;
    let s = scenario(&a.scenario, Some(a.from))?;
    let room = RoomSpec::from_area_aspect(a.area, a.aspect_ratio)?;
    let sweep = sweep_frequency(&freqs, &s, room, &grid_options(&a.grid))?;

    let mut m = Manifest::new("sweep-frequency");
    m.scenario(&s)
        .set("room", json!({"width": room.width(), "length": room.length()}))
        .set(
            "optimum",
            json!({
                "f_star_ghz": sweep.f_star_ghz,
                "g_i": sweep.g_i_star,
                "bracket": sweep.brackets.last(),
                "g_p_non_decreasing": sweep.g_p_non_decreasing,
                "g_i_unimodal": sweep.g_i_unimodal,
            }),
        );
    grid_manifest(&mut m, &a.grid);
    let table: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| vec![num(r.frequency_ghz), num(r.mean.g_i), num(r.mean.g_p)])
        .collect();
    m.output(&write_csv(
        ctx.out_dir,
        "sweep_frequency.csv",
        &["frequency_ghz", "mean_g_i", "mean_g_p"],
        &table,
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    for r in &sweep.rows {
        println!("{},{},{}", r.frequency_ghz, r.mean.g_i, r.mean.g_p);
    }
    let (lo, hi) = sweep.brackets.last().copied().unwrap_or((sweep.f_star_ghz, sweep.f_star_ghz));
    println!(
        "argmax f_star_ghz={} g_i={} bracket=[{lo},{hi}] g_p_non_decreasing={} g_i_unimodal={}",
        sweep.f_star_ghz, sweep.g_i_star, sweep.g_p_non_decreasing, sweep.g_i_unimodal
    );
    Ok(())
}

fn centre(layout: &BuildingLayout) -> Point2D {
    let b = layout.bounds();
    Point2D::new(0.5 * (b.min.x + b.max.x), 0.5 * (b.min.y + b.max.y))
}

pub fn validate_mc(ctx: &Ctx, a: &ValidateMcArgs) -> Result<()> {
    let (layout, case) = match (a.width, &a.layout, a.builtin) {
        (Some(w), _, _) => (make_rect_room(RoomSpec::new(w, a.length.unwrap_or(w))?, a.wall_db)?, "room"),
        (None, Some(path), _) => (load_layout(path)?, "layout"),
        (None, None, Some(b)) => (builtin(b)?, "builtin"),
        (None, None, None) => (
            BuildingLayout::empty(Bounds::new(Point2D::new(-1.0, -1.0), Point2D::new(1.0, 1.0))?),
            "open-space",
        ),
    };
    let c = centre(&layout);
    let ue = Point2D::new(a.ue_x.unwrap_or(c.x), a.ue_y.unwrap_or(c.y));
    let s = scenario(&a.scenario, None)?;
    let gm = models(a.nlos_model);
    let quad = QuadratureConfig {
        angular: a.angular,
        r_max_m: Some(a.mc_r_max),
        ..QuadratureConfig::default()
    };
    let cfg = McConfig {
        n_elements: a.n,
        seed: a.seed,
        repetitions: a.reps,
        r_max_m: Some(a.mc_r_max),
    };
    let q = building_powers(&layout, &s, ue, &quad, gm)?;
    let mc = mc_powers(&layout, &s, ue, gm, &cfg)?;

    let fields = |b: &PowerBreakdown| [b.p_o, b.i_o, b.p_b, b.i_b, b.p_b_los, b.p_b_nlos, b.i_b_los, b.i_b_nlos];
    let names = ["p_o", "i_o", "p_b", "i_b", "p_b_los", "p_b_nlos", "i_b_los", "i_b_nlos"];
    let mut worst: f64 = 0.0;
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(fields(&q).iter().zip(fields(&mc.mean).iter().zip(fields(&mc.std_err))))
        .map(|(name, (q, (mean, se)))| {
            let z = if se > 0.0 { (mean - q) / se } else { 0.0 };
            if name.len() == 3 {
                worst = worst.max(z.abs());
            }
            vec![name.to_string(), num(*q), num(*mean), num(se), num(z)]
        })
        .collect();

    let mut m = Manifest::new("validate-mc");
    m.scenario(&s)
        .layout(&layout)
        .set("case", json!(case))
        .set("ue", json!([ue.x, ue.y]))
        .set(
            "monte_carlo",
            json!({"n": a.n, "seed": a.seed, "repetitions": a.reps, "r_max_m": a.mc_r_max, "rng": "ChaCha8, stream = repetition"}),
        )
        .set("angular", json!(a.angular))
        .set("nlos_model", json!(format!("{:?}", a.nlos_model)));
    m.output(&write_csv(
        ctx.out_dir,
        "mc.csv",
        &["quantity", "quadrature", "mc_mean", "mc_std_err", "z"],
        &rows,
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    println!("case={case} samples={} max_abs_z={worst}", mc.samples);
    Ok(())
}

pub fn train_surrogate(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let s = scenario(&a.scenario, Some(a.band))?.with_frequency(a.band);
    s.validate()?;
    let opts = grid_options(&a.grid);
    let data = generate_dataset(&a.areas, &a.aspect_ratios, &s, &opts)?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        validation_fraction: a.validation_fraction,
        ..TrainConfig::default()
    };
    let (model, report) = train(MlpModel::new(&DEFAULT_LAYERS, a.seed)?, &data, &cfg)?;
    let model_path = a.model.clone().unwrap_or_else(|| ctx.out_dir.join("model.txt"));
    fs::write(&model_path, format_model(&model)).with_context(|| format!("writing {}", model_path.display()))?;

    let mut m = Manifest::new("train-surrogate");
    m.scenario(&s)
        .set("areas_m2", json!(a.areas))
        .set("aspect_ratios", json!(a.aspect_ratios))
        .set(
            "training",
            json!({
                "layers": DEFAULT_LAYERS,
                "learning_rate": cfg.learning_rate,
                "momentum": cfg.momentum,
                "batch_size": cfg.batch_size,
                "epochs": cfg.epochs,
                "seed": cfg.seed,
                "validation_fraction": cfg.validation_fraction,
                "final_lr_fraction": cfg.final_lr_fraction,
                "n_train": report.n_train,
                "n_validation": report.n_validation,
                "validation_rmse": {"g_i": report.validation_rmse[0], "g_p": report.validation_rmse[1]},
            }),
        );
    grid_manifest(&mut m, &a.grid);
    m.output(&model_path);
    let dataset: Vec<Vec<String>> = data
        .iter()
        .map(|d| d.input.iter().chain(&d.target).map(|v| num(*v)).collect())
        .collect();
    m.output(&write_csv(
        ctx.out_dir,
        "dataset.csv",
        &["x", "y", "width", "length", "g_i", "g_p"],
        &dataset,
    )?);
    let loss: Vec<Vec<String>> = report
        .loss_curve
        .iter()
        .enumerate()
        .map(|(e, l)| vec![e.to_string(), num(*l)])
        .collect();
    m.output(&write_csv(ctx.out_dir, "loss.csv", &["epoch", "train_mse_normalized"], &loss)?);
    m.write(ctx.out_dir, ctx.threads)?;
    println!(
        "rows={} validation_rmse_g_i={} validation_rmse_g_p={}",
        data.len(),
        report.validation_rmse[0],
        report.validation_rmse[1]
    );
    Ok(())
}

fn read_inputs(path: &Path) -> Result<Vec<[f64; 4]>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading input {}", path.display()))?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("input {} has no `{name}` column", path.display()))
    };
    let idx = [col("x")?, col("y")?, col("width")?, col("length")?];
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; 4];
        for (v, &k) in row.iter_mut().zip(&idx) {
            let field = rec.get(k).unwrap_or("");
            *v = field.trim().parse().map_err(|_| bwp_core::Error::Parse {
                line: i + 2,
                message: format!("`{field}` is not a number"),
            })?;
        }
        out.push(row);
    }
    Ok(out)
}

pub fn predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    let model = parse_model(&read(&a.model, "model")?).with_context(|| format!("in model {}", a.model.display()))?;
    let inputs = match (&a.input, a.x, a.y, a.width, a.length) {
        (Some(path), ..) => read_inputs(path)?,
        (None, Some(x), Some(y), Some(w), Some(l)) => vec![[x, y, w, l]],
        _ => bail!(UsageError("give --input or all of --x --y --width --length".into())),
    };
    let preds = predict_all(&model, &inputs)?;
    let rows: Vec<Vec<String>> = inputs
        .iter()
        .zip(&preds)
        .map(|(x, y)| x.iter().chain(y).map(|v| num(*v)).collect())
        .collect();
    let mut m = Manifest::new("predict");
    m.set("model", json!(a.model.display().to_string()));
    m.output(&write_csv(
        ctx.out_dir,
        "predictions.csv",
        &["x", "y", "width", "length", "g_i", "g_p"],
        &rows,
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    if let [only] = preds.as_slice() {
        println!("g_i={} g_p={}", only[0], only[1]);
    } else {
        println!("rows={}", preds.len());
    }
    Ok(())
}

pub fn calibrate(ctx: &Ctx, a: &CalibrateArgs) -> Result<()> {
    let s = scenario(&a.scenario, None)?;
    let opts = grid_options(&a.grid);
    let mut rooms = Vec::new();
    let mut grids = Vec::new();
    for &area in &a.areas {
        for &ar in &a.aspect_ratios {
            let spec = RoomSpec::from_area_aspect(area, ar)?;
            grids.push(room_grid_eval(spec, &s, &opts)?);
            rooms.push((area, ar));
        }
    }
    let c = calibrate_noise(&grids, a.lo, a.hi)?;

    let mut m = Manifest::new("calibrate-noise");
    m.scenario(&s).set(
        "calibration",
        json!({
            "target": [a.lo, a.hi],
            "sigma2_w": c.sigma2_w,
            "best_sigma2_w": c.best_sigma2_w,
            "best_residual": c.best_residual,
            "degenerate": c.degenerate,
        }),
    );
    grid_manifest(&mut m, &a.grid);
    let rows: Vec<Vec<String>> = rooms
        .iter()
        .zip(&c.room_means_at_best)
        .map(|((area, ar), g)| vec![num(*area), num(*ar), num(*g)])
        .collect();
    m.output(&write_csv(
        ctx.out_dir,
        "calibration.csv",
        &["area_m2", "aspect_ratio", "mean_g_i"],
        &rows,
    )?);
    m.write(ctx.out_dir, ctx.threads)?;
    match c.sigma2_w {
        Some(v) => println!("sigma2_w={v} residual=0 degenerate={}", c.degenerate),
        None => println!(
            "none found best_sigma2_w={} residual={} degenerate={}",
            c.best_sigma2_w, c.best_residual, c.degenerate
        ),
    }
    Ok(())
}
