//! Read a rate matrix and split it into money-market and term datasets.

use ratefit::market_data::{split_datasets, RateMatrix};

const CSV: &str = "\
Date,1/360A,30/360A,10Y,30Y
31.12.2010,0.606,0.781,2.972,3.306
07.01.2011,0.610,0.788,3.010,3.350
14.01.2011,0.615,0.790,3.121,3.402
21.01.2011,0.618,0.801,3.180,3.420
";

fn main() -> ratefit::Result<()> {
    let matrix = RateMatrix::from_reader(CSV.as_bytes())?;
    println!("{} dates x {} maturities", matrix.n_dates(), matrix.maturities().len());

    let split = split_datasets(&matrix)?;
    println!("money market: {:?}", split.money_market);
    println!("term:         {:?}", split.term);

    let s = matrix.series_for("30Y")?;
    for (date, rate) in &s.observations {
        println!("{date}  {rate:.3}");
    }
    Ok(())
}
