// Parse a design, validate it, print it back and rename values.

use std::error::Error;

use piperetime::ir::{parse_design, print_design, validate};

const SOURCE: &str = "
design mac {
  %a = pin : i8
  %b = pin : i8
  %p = mul %a, %b : i8
  %s = add %p, %acc : i8
  %acc = delay %s by 1 : i8
  sink %acc : i8
}
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(SOURCE)?;
    let diags = validate(&d);
    if !diags.is_empty() {
        return Err(format!("unexpected diagnostics: {diags:?}").into());
    }
    let text = print_design(&d);
    println!("{text}");

    let again = parse_design(&text)?;
    assert_eq!(print_design(&again), text);
    assert!(d.alpha_eq(&again.alpha_renamed()));
    println!(
        "{} registers, {} bits",
        d.register_count(),
        d.register_bits()
    );

    let broken = SOURCE.replace("%p = mul %a, %b : i8", "%p = mul %a, %b : i4");
    match parse_design(&broken) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => return Err("width mismatch went unnoticed".into()),
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
