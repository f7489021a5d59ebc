//! LQ gains from the Riccati solver, including the deadbeat case and a
//! two-state plant.

use agesched::control::PlantModel;
use nalgebra::DMatrix;

fn main() -> agesched::Result<()> {
    println!("{:>6} {:>6} {:>12} {:>12}", "A", "R", "P", "L*");
    for a in [0.5, 1.0, 1.25, 1.5] {
        for r in [0.0, 1.0] {
            let m = PlantModel::scalar(a, 1.0, 1.0, 1.0, r)?;
            println!(
                "{a:>6} {r:>6} {:>12.6} {:>12.6}",
                m.riccati()[0],
                m.gain()[0]
            );
        }
    }

    let double_integrator = PlantModel::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 1, &[0.5, 1.0]),
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
        DMatrix::from_element(1, 1, 0.1),
    )?;
    println!(
        "\ndouble integrator\nP = {}L* = {}",
        double_integrator.riccati(),
        double_integrator.gain()
    );
    Ok(())
}
