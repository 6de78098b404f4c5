package org.apache.kafka.clients.producer.internals;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class Sender {

  private static final Logger log = LoggerFactory.getLogger(Sender.class);

  private void reenqueueBatch(ProducerBatch batch, long now) {
    log.warn("Got error produce response with correlation id {} on topic-partition {}, retrying ({} attempts left)", batch.correlationId(), batch.topicPartition, batch.attemptsLeft());
    accumulator.reenqueue(batch, now);
  }
}
