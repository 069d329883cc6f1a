//! Hammersley points and Chebyshev function samples used to build datasets.

use fedsciml::heterogeneity::{hammersley, sample_chebyshev, star_discrepancy, ChebyshevSpaceSpec};
use fedsciml::rng::{stream, Stream};

fn main() -> fedsciml::Result<()> {
    for count in [16, 256, 1000] {
        let pts = hammersley(count, 2)?;
        println!("{count:>5} Hammersley points, star discrepancy {:.4}", star_discrepancy(&pts));
    }
    for k in 0..2 {
        let spec = ChebyshevSpaceSpec::for_client(10, 4, k, 2)?;
        let f = &sample_chebyshev(&spec, &mut stream(0, Stream::Sampling, k as u32), 1)[0];
        println!("client {k}: coefficients {:?}", f.coeffs.iter().map(|c| format!("{c:.2}")).collect::<Vec<_>>());
    }
    Ok(())
}
