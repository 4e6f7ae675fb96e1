use eeforecast::dataset::{fit_scaler, frame_supervised};
use eeforecast::dynamics::{peak_statistics, Peak, THRESHOLD_SIGMAS};
use proptest::prelude::*;

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 2..200)
}

proptest! {
    #[test]
    fn scaler_round_trip(values in series()) {
        let sc = fit_scaler(&values, -1.0, 1.0);
        prop_assume!(sc.is_ok());
        let sc = sc.unwrap();
        let scaled = sc.transform(&values);
        prop_assert!(scaled.iter().all(|y| (-1.0 - 1e-12..=1.0 + 1e-12).contains(y)));
        for (x, back) in values.iter().zip(sc.inverse_transform(&scaled)) {
            prop_assert!((x - back).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn framing_counts_and_unframes(values in series(), w in 1usize..6, h in 1usize..4) {
        prop_assume!(values.len() >= w + h);
        let ds = frame_supervised(&values, w, h).unwrap();
        prop_assert_eq!(ds.len(), values.len() - w - h + 1);
        prop_assert_eq!(ds.unframe(), values);
    }

    #[test]
    fn threshold_is_mean_plus_four_sigma(xs in prop::collection::vec(-50.0..50.0f64, 1..100)) {
        let peaks: Vec<Peak> = xs.iter().enumerate().map(|(i, &x)| Peak { t: i as f64, x }).collect();
        let st = peak_statistics(&peaks).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!((st.threshold - (mean + THRESHOLD_SIGMAS * sd)).abs() < 1e-9);
    }
}
