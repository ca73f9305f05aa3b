use crate::error::{Error, Result};
use crate::testfns::TestFn;

/// Something an optimizer can be run against.
pub trait Problem: Send {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn initial_point(&self) -> Vec<f64>;

    /// Loss at `w` for the next step, writing the gradient into `grad`.
    ///
    /// Stochastic problems advance their minibatch stream on every call.
    fn loss_grad(&mut self, w: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// Known minimizer, when there is one.
    fn optimum(&self) -> Option<Vec<f64>> {
        None
    }

    /// Maps an iterate back onto the feasible set after each step.
    fn project(&self, _w: &mut [f64]) {}
}

/// A test function started from a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFnProblem {
    pub function: TestFn,
    pub start: [f64; 2],
}

impl TestFnProblem {
    pub fn new(function: TestFn) -> Self {
        Self {
            function,
            start: function.default_start(),
        }
    }

    pub fn with_start(mut self, start: [f64; 2]) -> Self {
        self.start = start;
        self
    }
}

impl Problem for TestFnProblem {
    fn name(&self) -> String {
        self.function.name().to_string()
    }

    fn dim(&self) -> usize {
        2
    }

    fn initial_point(&self) -> Vec<f64> {
        self.start.to_vec()
    }

    fn loss_grad(&mut self, w: &[f64], grad: &mut [f64]) -> Result<f64> {
        if w.len() != 2 || grad.len() != 2 {
            return Err(Error::Shape {
                what: "test-function point",
                expected: 2,
                got: w.len(),
            });
        }
        let e = self.function.eval([w[0], w[1]]);
        grad.copy_from_slice(&e.grad);
        Ok(e.value)
    }

    fn optimum(&self) -> Option<Vec<f64>> {
        Some(self.function.optimum().to_vec())
    }
}
