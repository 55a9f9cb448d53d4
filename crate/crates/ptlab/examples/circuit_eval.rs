//! Parse a circuit, evaluate its main diagram, and print the canonical
//! form alongside the resulting transfer matrix.

use ptlab::dsl;

fn main() -> Result<(), ptlab::PtError> {
    let source = "
        # straighten a bent wire
        system A = classical(3)
        main = (cap(A) * id(A)) . (id(A) * cup(A))
    ";
    let file = dsl::parse(source)?;
    println!("canonical form:\n{}", dsl::pretty_print(&file));
    let process = dsl::evaluate(&file)?;
    println!("evaluates to {} -> {}", process.dom(), process.cod());
    for r in 0..process.transfer().rows() {
        let row: Vec<String> = (0..process.transfer().cols())
            .map(|c| format!("{:.1}", process.transfer().get(r, c).re))
            .collect();
        println!("  [{}]", row.join(", "));
    }
    let circle = dsl::run("system A = classical(5)\nmain = trace(id(A), 1)")?;
    println!("closed loop on classical(5) = {}", circle.as_number().unwrap().re);
    Ok(())
}
