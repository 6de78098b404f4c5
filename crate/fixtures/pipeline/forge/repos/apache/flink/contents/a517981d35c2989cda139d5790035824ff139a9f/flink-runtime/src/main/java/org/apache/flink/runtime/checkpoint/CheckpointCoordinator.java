package org.apache.flink.runtime.checkpoint;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class CheckpointCoordinator {

  private static final Logger LOG = LoggerFactory.getLogger(CheckpointCoordinator.class);

  private final CheckpointStatsTracker statsTracker;

  public CheckpointCoordinator(CheckpointStatsTracker statsTracker) {
    this.statsTracker = statsTracker;
  }

  void completePendingCheckpoint(PendingCheckpoint pending) {
    long id = pending.getCheckpointId();
    CompletedCheckpoint completed = pending.finalizeCheckpoint();
    if (LOG.isDebugEnabled()) {
      LOG.debug("Checkpoint {} stats: {}", id, statsTracker.summary(id));
    }
    statsTracker.reportCompleted(completed);
  }
}
