use paradim_core::dynamics;
use paradim_core::pressure::{PreimageTree, PeriodicPoints, aitken_tail, richardson_tail};
use num_complex::Complex;
type Cx = Complex<f64>;

fn main() {
    for cre in [-0.9f64, -0.3, 0.1, -0.5] {
        let c = Cx::new(cre, 0.0);
        let beta = dynamics::beta_fixed_point(c);
        for t in [1.0f64, 1.15] {
            let pre: Vec<(usize, f64)> = [8usize, 10, 12, 14]
                .iter().map(|&n| (n, PreimageTree::build(c, beta, n).unwrap().pressure(t))).collect();
            let per: Vec<f64> = [8usize, 10, 12, 14]
                .iter().map(|&n| PeriodicPoints::build(c, n).unwrap().pressure(t)).collect();
            let rich12 = richardson_tail(&[10, 12], &[pre[1].1, pre[2].1]);
            let rich14 = richardson_tail(&[12, 14], &[pre[2].1, pre[3].1]);
            let ait12 = aitken_tail(&per[..3]);
            let ait14 = aitken_tail(&per);
            println!("c={cre} t={t}: pre-rich12 {rich12:.6} per12 {:.6} perait12 {ait12:.6} | rich14 {rich14:.6} per14 {:.6} perait14 {ait14:.6}", per[2], per[3]);
        }
    }
}
