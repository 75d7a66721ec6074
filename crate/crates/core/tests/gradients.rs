#[path = "common/gradcheck.rs"]
mod gradcheck;

#[test]
fn mlp_gradients() {
    let worst = gradcheck::mlp_gradients();
    assert!(worst.passes(), "{worst:?}");
}

#[test]
fn bilstm_gradients() {
    let worst = gradcheck::bilstm_gradients();
    assert!(worst.passes(), "{worst:?}");
}

#[test]
fn guesser_attention_pooling_gradients() {
    let worst = gradcheck::guesser_attention_pooling_gradients();
    assert!(worst.passes(), "{worst:?}");
}

#[test]
fn enquirer_head_gradients() {
    let worst = gradcheck::enquirer_head_gradients();
    assert!(worst.passes(), "{worst:?}");
}

#[test]
fn ppo_objective_gradients() {
    let worst = gradcheck::ppo_objective_gradients();
    assert!(worst.passes(), "{worst:?}");
}

#[test]
fn softmax_cross_entropy_gradients() {
    let worst = gradcheck::softmax_cross_entropy_gradients();
    assert!(worst.passes(), "{worst:?}");
}
