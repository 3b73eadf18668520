//! Seeded synthetic inputs: 30 county profiles in three planted groups and
//! matching daily case series with a weekly reporting cycle.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const URBAN: [&str; 10] = [
    "São Capital",
    "Santa Aurora",
    "Porto Ribeiro",
    "Vila Nova do Sul",
    "Guarujá Alto",
    "Bertioga Velha",
    "Campo Belo",
    "Nova Prudência",
    "Ribeirão Claro",
    "Santo Amaro do Mar",
];
const SUBURBAN: [&str; 10] = [
    "Arujá Leste",
    "Cajamar Novo",
    "Vinhedo Baixo",
    "Itapeva do Norte",
    "Jardim Paulista",
    "Serra Azul",
    "Boa Vista",
    "Lagoa Seca",
    "Pedra Branca",
    "Rio Fundo",
];
const RURAL: [&str; 10] = [
    "Alvorada do Campo",
    "Barra do Turvo",
    "Cerro Verde",
    "Dourado",
    "Engenho Velho",
    "Fartura",
    "Gavião Peixoto",
    "Herculândia",
    "Iacri",
    "Jambeiro",
];
/// Appears in the cases file only.
pub const ORPHAN: &str = "Vila Órfã";
pub const CAPITAL: &str = "São Capital";
pub const START: &str = "2020-03-01";
pub const DAYS: usize = 180;

/// Group centres: density, income, elderly share, nurses per 1000, sewage
/// coverage. Density and income move together across groups; the other
/// three do not.
const CENTRES: [[f64; 5]; 3] = [
    [3200.0, 4200.0, 0.12, 3.0, 0.70],
    [900.0, 3300.0, 0.09, 1.2, 0.95],
    [60.0, 2200.0, 0.18, 1.8, 0.50],
];
const SPREAD: [f64; 5] = [60.0, 40.0, 0.002, 0.05, 0.01];

#[derive(Debug, Clone)]
pub struct SyntheticFixture {
    pub profiles: PathBuf,
    pub cases: PathBuf,
    /// Profile counties in file order, with their planted group (0 urban,
    /// 1 suburban, 2 rural).
    pub counties: Vec<(String, usize)>,
}

impl SyntheticFixture {
    pub fn all_case_counties(&self) -> Vec<String> {
        let mut v: Vec<String> = self.counties.iter().map(|(c, _)| c.clone()).collect();
        v.push(ORPHAN.to_string());
        v
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `profiles.csv` and `cases.csv` into `dir`.
pub fn write_synthetic_fixture(dir: impl AsRef<Path>, seed: u64) -> Result<SyntheticFixture> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut counties = Vec::new();
    for (g, names) in [URBAN, SUBURBAN, RURAL].iter().enumerate() {
        for name in names {
            counties.push((name.to_string(), g));
        }
    }

    let mut profiles = String::from("county,density,income,elderly_share,nurses_per_1000,sewage_coverage\n");
    for (name, g) in &counties {
        let vals: Vec<String> = CENTRES[*g]
            .iter()
            .zip(SPREAD)
            .map(|(c, s)| format!("{:.4}", c + s * unit.sample(&mut rng)))
            .collect();
        profiles.push_str(&format!("{name},{}\n", vals.join(",")));
    }

    let start: NaiveDate = START.parse().expect("valid start date");
    let weekly = [1.15, 1.1, 1.05, 1.0, 0.95, 0.7, 0.6];
    let mut cases = String::from("date,county,new_cases,new_deaths\n");
    let case_counties: Vec<(String, usize)> = counties
        .iter()
        .cloned()
        .chain(std::iter::once((ORPHAN.to_string(), 1)))
        .collect();
    for (i, (name, g)) in case_counties.iter().enumerate() {
        let (amp, peak, width) = match g {
            0 if name == CAPITAL => (3000.0, 100.0, 45.0),
            0 => (rng.random_range(300.0..600.0), 100.0, 45.0),
            1 => (rng.random_range(80.0..200.0), 120.0, 40.0),
            _ => (rng.random_range(10.0..40.0), 130.0, 35.0),
        };
        for t in 0..DAYS {
            let x = (t as f64 - peak) / width;
            let mean = (2.0 + amp * (-x * x).exp()) * weekly[t % 7];
            let noisy = mean * (0.15 * unit.sample(&mut rng)).exp();
            let mut new_cases = noisy.round() as i64;
            let deaths = (noisy * 0.02 * (0.3 * unit.sample(&mut rng)).exp()).round() as i64;
            if i == 5 && t == 90 {
                // a downward revision, clamped by the loader
                new_cases = -3;
            }
            let date = start
                .checked_add_days(Days::new(t as u64))
                .expect("date in range");
            cases.push_str(&format!("{date},{name},{new_cases},{deaths}\n"));
        }
    }

    let profiles_path = dir.join("profiles.csv");
    let cases_path = dir.join("cases.csv");
    write(&profiles_path, &profiles)?;
    write(&cases_path, &cases)?;
    Ok(SyntheticFixture {
        profiles: profiles_path,
        cases: cases_path,
        counties,
    })
}
