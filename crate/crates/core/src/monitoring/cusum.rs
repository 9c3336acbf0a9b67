//! One-sided upper CUSUM charts and the combined shape/color scheme.

/// Upper CUSUM on the standardized statistic `(x − mu) / sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumChart {
    pub mu: f64,
    pub sigma: f64,
    pub k_ref: f64,
    pub h: f64,
    pub state: f64,
}

impl CusumChart {
    pub fn new(mu: f64, sigma: f64, k_ref: f64, h: f64) -> Self {
        Self { mu, sigma, k_ref, h, state: 0.0 }
    }

    pub fn step(&mut self, x: f64) {
        self.state = (self.state + (x - self.mu) / self.sigma - self.k_ref).max(0.0);
    }

    pub fn signaling(&self) -> bool {
        self.state > self.h
    }

    pub fn reset(&mut self) {
        self.state = 0.0;
    }
}

pub fn cusum_update(chart: &CusumChart, x: f64) -> CusumChart {
    let mut next = *chart;
    next.step(x);
    next
}

/// Which chart(s) raised an alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Shape,
    Color,
    Both,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Self::Shape => "shape",
            Self::Color => "color",
            Self::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shape" => Some(Self::Shape),
            "color" => Some(Self::Color),
            "both" => Some(Self::Both),
            _ => None,
        }
    }

    fn from_flags(shape: bool, color: bool) -> Option<Self> {
        match (shape, color) {
            (true, true) => Some(Self::Both),
            (true, false) => Some(Self::Shape),
            (false, true) => Some(Self::Color),
            (false, false) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedChartState {
    pub shape_chart: CusumChart,
    pub color_chart: CusumChart,
    pub time_index: usize,
    pub last_signal: Option<Signal>,
}

impl CombinedChartState {
    pub fn new(shape_chart: CusumChart, color_chart: CusumChart) -> Self {
        Self {
            shape_chart,
            color_chart,
            time_index: 0,
            last_signal: None,
        }
    }

    /// Update both charts; charts are not reset after an alarm.
    pub fn step(&mut self, s: f64, c: f64) -> Option<Signal> {
        self.shape_chart.step(s);
        self.color_chart.step(c);
        self.time_index += 1;
        let sig = Signal::from_flags(self.shape_chart.signaling(), self.color_chart.signaling());
        if sig.is_some() {
            self.last_signal = sig;
        }
        sig
    }
}

pub fn combined_step(state: &CombinedChartState, s: f64, c: f64) -> (CombinedChartState, Option<Signal>) {
    let mut next = *state;
    let sig = next.step(s, c);
    (next, sig)
}
