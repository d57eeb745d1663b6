//! OSPA distances between small point sets, showing the localisation and
//! cardinality parts of the metric.

use disparity_fusion::metrics::{ospa, OspaParams};
use nalgebra::Point3;

fn main() -> disparity_fusion::Result<()> {
    let params = OspaParams::euclidean(20.0, 1.0);
    let truth = [Point3::new(0.0, 0.0, 100.0), Point3::new(30.0, 0.0, 120.0)];
    let cases: [(&str, Vec<Point3<f64>>); 5] = [
        ("exact", truth.to_vec()),
        (
            "both off by 1 cm",
            truth.iter().map(|p| p + nalgebra::Vector3::x()).collect(),
        ),
        ("one missed", vec![truth[0]]),
        (
            "one false alarm",
            vec![truth[0], truth[1], Point3::new(-50.0, 10.0, 90.0)],
        ),
        ("empty estimate", Vec::new()),
    ];
    println!("cutoff {} cm, order {}", params.cutoff, params.order);
    for (name, est) in &cases {
        println!("{name:<16} {:.4}", ospa(est, &truth, &params)?);
    }
    Ok(())
}
