//! Reads an annotation file with awkward input (BOM, CRLF, commas in the
//! text, clockwise corners) and writes it back in canonical form.
//!
//!     cargo run --example parse_annotations [file]

use textfuse::formats::{parse_annotation_file, write_records};

const SAMPLE: &str = "\u{feff}377,117,463,117,465,130,378,130,Genaxis Theatre\r\n\
374,155,409,155,409,170,374,170,###\r\n\
120,60,40,60,40,20,120,20,\"cà phê, sữa đá\"\r\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = match std::env::args_os().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => SAMPLE.as_bytes().to_vec(),
    };
    let records = parse_annotation_file(&bytes)?;
    for r in &records {
        let flag = if r.ignore { " (don't care)" } else { "" };
        println!("{:<24} area {:>8.1}{flag}", format!("{:?}", r.text), r.quad.area());
    }
    print!("\ncanonical form:\n{}", write_records(&records));

    match parse_annotation_file(b"1,2,3,4,oops\n") {
        Err(e) => println!("\nmalformed input is reported: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
