use softedge::mapio::{read_flo, read_pfm, read_pnm, write_flo, write_pfm, write_ppm, Endianness, PnmImage};
use softedge::{DepthConvention, FlowField, ImageRgb, ScalarMap};

fn main() -> softedge::Result<()> {
    let depth = ScalarMap::from_fn(4, 3, DepthConvention::InverseDepth, |x, y| 0.25 * (x + y) as f64)?;
    for endian in [Endianness::Little, Endianness::Big] {
        let bytes = write_pfm(&depth, endian)?;
        assert_eq!(read_pfm(&bytes)?.data(), depth.data());
        println!("PFM {endian:?}: {} bytes", bytes.len());
    }

    let flow = FlowField::uniform(4, 3, 1.5, -0.5)?;
    let bytes = write_flo(&flow)?;
    assert_eq!(read_flo(&bytes)?, flow);
    println!("FLO: {} bytes", bytes.len());

    let img = ImageRgb::filled(4, 3, [1.0, 0.5, 0.0])?;
    match read_pnm(&write_ppm(&img))? {
        PnmImage::Rgb(back) => println!("PPM pixel {:?}", back.pixel(0, 0)),
        PnmImage::Gray(_) => unreachable!(),
    }

    match read_pfm(b"Pf\n4 3\n-1.0\n") {
        Err(e) => println!("truncated PFM rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
