//! Add up the temporal context of stacked layers.

use gramcomb::diversity::{self, LayerContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tdnn = diversity::parse_layers(
        "# TDNN: per-layer frame offsets\n\
         splice -1,0,1\n\
         splice -1,0,1\n\
         splice -1,0,1,2\n\
         splice -3,0,3\n\
         splice -3,0,3\n\
         splice -6,-3,0\n\
         splice 0\n",
    )?;
    let rf = diversity::receptive_field(&tdnn)?;
    println!("TDNN: {} frames left, {} right", rf.left, rf.right);

    let dnn = [LayerContext::Spliced((-10..=10).collect())];
    let rf = diversity::receptive_field(&dnn)?;
    println!("DNN with a +-10 input splice: {} left, {} right", rf.left, rf.right);

    // A bidirectional recurrent layer sees a bounded window each way when
    // trained on chunks; unidirectional ones only look back.
    let mixed = vec![
        LayerContext::Spliced(vec![-2, -1, 0, 1, 2]),
        LayerContext::Recurrent { past: 40, future: 40 },
        LayerContext::Recurrent { past: 40, future: 0 },
    ];
    let rf = diversity::receptive_field(&mixed)?;
    println!("splice + BLSTM + LSTM: {} left, {} right", rf.left, rf.right);
    Ok(())
}
