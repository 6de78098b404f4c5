package org.apache.hadoop.hbase.regionserver;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class MemStoreFlusher {

  private static final Logger LOG = LoggerFactory.getLogger(MemStoreFlusher.class);

  boolean flushRegion(HRegion region) {
    try {
      region.flush(true);
    } catch (DroppedSnapshotException ex) {
      LOG.error("Replay of WAL required. Forcing server shutdown", ex);
      return false;
    }
    return true;
  }
}
