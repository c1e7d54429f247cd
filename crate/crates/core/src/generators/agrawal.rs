//! AGRAWAL loan-applicant generator with its ten classification functions.
//!
//! Attribute order: salary, commission, age, elevel, car, zipcode, hvalue,
//! hyears, loan. Discrete attributes are integer coded. Label `true` is
//! "group A", i.e. the classification rule holds.

use rand::Rng;

use super::{generator_rng, DriftSchedule, StreamGenerator};
use crate::error::{Error, Result};
use crate::stream::{Instance, RunSeed, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgrawalAttributes {
    pub salary: f64,
    pub commission: f64,
    pub age: f64,
    pub elevel: f64,
    pub car: f64,
    pub zipcode: f64,
    pub hvalue: f64,
    pub hyears: f64,
    pub loan: f64,
}

impl AgrawalAttributes {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.salary,
            self.commission,
            self.age,
            self.elevel,
            self.car,
            self.zipcode,
            self.hvalue,
            self.hyears,
            self.loan,
        ]
    }

    fn draw(rng: &mut impl Rng) -> Self {
        let salary = 20_000.0 + 130_000.0 * rng.gen::<f64>();
        let commission = if salary >= 75_000.0 {
            0.0
        } else {
            10_000.0 + 65_000.0 * rng.gen::<f64>()
        };
        let age = rng.gen_range(20..=80) as f64;
        let elevel = rng.gen_range(0..5) as f64;
        let car = rng.gen_range(1..=20) as f64;
        let zipcode = rng.gen_range(0..9) as f64;
        let hvalue = (9.0 - zipcode) * 100_000.0 * (0.5 + rng.gen::<f64>());
        let hyears = rng.gen_range(1..=30) as f64;
        let loan = rng.gen::<f64>() * 500_000.0;
        Self {
            salary,
            commission,
            age,
            elevel,
            car,
            zipcode,
            hvalue,
            hyears,
            loan,
        }
    }

    fn perturb(&mut self, fraction: f64, rng: &mut impl Rng) {
        self.salary = jitter(self.salary, 20_000.0, 150_000.0, fraction, rng);
        if self.commission > 0.0 {
            self.commission = jitter(self.commission, 10_000.0, 75_000.0, fraction, rng);
        }
        self.age = jitter(self.age, 20.0, 80.0, fraction, rng).round();
        self.hvalue = jitter(self.hvalue, 0.0, 1_350_000.0, fraction, rng);
        self.hyears = jitter(self.hyears, 1.0, 30.0, fraction, rng).round();
        self.loan = jitter(self.loan, 0.0, 500_000.0, fraction, rng);
    }
}

fn jitter(v: f64, lo: f64, hi: f64, fraction: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    (v + (hi - lo) * fraction * (2.0 * u - 1.0)).clamp(lo, hi)
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    lo <= v && v <= hi
}

/// Evaluates classification function `function` (1-10) on `a`.
pub fn agrawal_function(function: u8, a: &AgrawalAttributes) -> Result<bool> {
    let age = a.age;
    let salary = a.salary;
    let elevel = a.elevel;
    let loan = a.loan;
    let total = a.salary + a.commission;
    let young = age < 40.0;
    let middle = (40.0..60.0).contains(&age);
    let label = match function {
        1 => young || age >= 60.0,
        2 => {
            if young {
                within(salary, 50_000.0, 100_000.0)
            } else if middle {
                within(salary, 75_000.0, 125_000.0)
            } else {
                within(salary, 25_000.0, 75_000.0)
            }
        }
        3 => {
            if young {
                elevel == 0.0 || elevel == 1.0
            } else if middle {
                within(elevel, 1.0, 3.0)
            } else {
                within(elevel, 2.0, 4.0)
            }
        }
        4 => {
            if young {
                if elevel == 0.0 || elevel == 1.0 {
                    within(salary, 25_000.0, 75_000.0)
                } else {
                    within(salary, 50_000.0, 100_000.0)
                }
            } else if middle {
                if within(elevel, 1.0, 3.0) {
                    within(salary, 50_000.0, 100_000.0)
                } else {
                    within(salary, 75_000.0, 125_000.0)
                }
            } else if within(elevel, 2.0, 4.0) {
                within(salary, 50_000.0, 100_000.0)
            } else {
                within(salary, 25_000.0, 75_000.0)
            }
        }
        5 => {
            if young {
                if within(salary, 50_000.0, 100_000.0) {
                    within(loan, 100_000.0, 300_000.0)
                } else {
                    within(loan, 200_000.0, 400_000.0)
                }
            } else if middle {
                if within(salary, 75_000.0, 125_000.0) {
                    within(loan, 200_000.0, 400_000.0)
                } else {
                    within(loan, 300_000.0, 500_000.0)
                }
            } else if within(salary, 25_000.0, 75_000.0) {
                within(loan, 300_000.0, 500_000.0)
            } else {
                within(loan, 100_000.0, 300_000.0)
            }
        }
        6 => {
            if young {
                within(total, 50_000.0, 100_000.0)
            } else if middle {
                within(total, 75_000.0, 125_000.0)
            } else {
                within(total, 25_000.0, 75_000.0)
            }
        }
        7 => 2.0 * total / 3.0 - loan / 5.0 - 20_000.0 > 0.0,
        8 => 2.0 * total / 3.0 - 5_000.0 * elevel - 20_000.0 > 0.0,
        9 => 2.0 * total / 3.0 - 5_000.0 * elevel - loan / 5.0 - 10_000.0 > 0.0,
        10 => {
            let equity = if a.hyears >= 20.0 {
                a.hvalue * (a.hyears - 20.0) / 10.0
            } else {
                0.0
            };
            2.0 * total / 3.0 - 5_000.0 * elevel + equity / 5.0 - 10_000.0 > 0.0
        }
        other => {
            return Err(Error::config(format!(
                "AGRAWAL function index must be in 1..=10, got {other}"
            )))
        }
    };
    Ok(label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgrawalConfig {
    pub schedule: DriftSchedule<u8>,
    /// Fraction of each numeric attribute's range used to jitter features
    /// after labelling.
    pub perturbation: f64,
}

impl AgrawalConfig {
    pub fn validate(&self) -> Result<()> {
        for &f in self.schedule.concepts() {
            if !(1..=10).contains(&f) {
                return Err(Error::config(format!(
                    "AGRAWAL function index must be in 1..=10, got {f}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.perturbation) {
            return Err(Error::config("agrawal perturbation must be in [0, 1]"));
        }
        Ok(())
    }
}

pub struct AgrawalGenerator {
    config: AgrawalConfig,
    rng: StreamRng,
    t: u64,
}

impl AgrawalGenerator {
    pub fn new(config: AgrawalConfig, seed: RunSeed) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: generator_rng(seed),
            t: 0,
        })
    }

    /// Function index labelling the next instance, before gradual mixing.
    pub fn nominal_function(&self, t: u64) -> u8 {
        let s = &self.config.schedule;
        s.concepts()[s.segment(t)]
    }
}

impl StreamGenerator for AgrawalGenerator {
    fn dim(&self) -> usize {
        9
    }

    fn next_instance(&mut self) -> Instance {
        let t = self.t;
        self.t += 1;
        let function = self.config.schedule.concept_at(t, &mut self.rng);
        let mut attrs = AgrawalAttributes::draw(&mut self.rng);
        let label = agrawal_function(function, &attrs).expect("validated function index");
        if self.config.perturbation > 0.0 {
            attrs.perturb(self.config.perturbation, &mut self.rng);
        }
        Instance::new(t, attrs.to_vec(), label)
    }
}
