pub mod random_gdp;
