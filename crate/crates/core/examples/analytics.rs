//! Field-year percentile ranks and a clustered regression with a squared term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamscope::analytics::{fit, turning_point, Family, RegressionSpec, Term, VariableTable};

fn main() -> teamscope::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    let field: Vec<String> = (0..n).map(|i| format!("F{}", i % 4)).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&field)
        .map(|(x, f)| {
            let scale = if f == "F0" { 10.0 } else { 1.0 };
            scale * (1.0 + 2.0 * x - 0.6 * x * x + rng.gen_range(-0.5..0.5))
        })
        .collect();

    let mut t = VariableTable::new((0..n).map(|i| format!("d{i}")).collect());
    t.add_column("x", x.into_iter().map(Some).collect())?;
    t.add_column("y", y.into_iter().map(Some).collect())?;
    t.add_factor("field", field.into_iter().map(Some).collect())?;
    t.add_factor(
        "journal",
        (0..n).map(|i| Some(format!("J{}", i % 40))).collect(),
    )?;
    t.add_field_weighted(&["y"], &["field"])?;

    let spec = RegressionSpec {
        name: "demo".into(),
        family: Family::Linear,
        dependent: "fw_y".into(),
        regressors: vec![Term::Linear("x".into()), Term::Square("x".into())],
        fixed_effects: vec!["field".into()],
        cluster: "journal".into(),
        intercept: true,
    };
    let f = fit(&spec, &t)?;
    for (c, (b, se)) in f.columns.iter().zip(f.coef.iter().zip(&f.se)) {
        println!("{c:>14} {b:>9.4} ({se:.4})");
    }
    let (b1, b2) = (f.coefficient("x").unwrap(), f.coefficient("x^2").unwrap());
    println!("turning point {:.3}", turning_point(b1, b2)?);
    Ok(())
}
